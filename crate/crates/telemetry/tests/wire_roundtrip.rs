use std::collections::BTreeMap;

use aeromap_core::fuzzy::{IaqClass, InputVar};
use aeromap_core::log::PosedFrame;
use aeromap_core::mapper::{LineModel, Orientation, WallModel};
use aeromap_core::sim::{Pose, SweepPlan};
use aeromap_core::{MapPoint, Point, SensorFrame};
use aeromap_telemetry::wire::{Ack, ClassificationReport, ErrorBody, MapBatch, Status, MAP_BATCH};
use aeromap_telemetry::*;
use proptest::prelude::*;

/// Values already on the 0.001 grid, as every valid frame carries.
fn milli(lo: i64, hi: i64) -> impl Strategy<Value = f64> {
    (lo..hi).prop_map(|k| k as f64 / 1000.0)
}

fn pose() -> impl Strategy<Value = Pose> {
    (milli(0, 10_000_000), milli(0, 10_000_000), 0u32..360).prop_map(|(x, y, h)| Pose::new(x, y, h as f64))
}

fn sensor() -> impl Strategy<Value = Payload> {
    (pose(), any::<u32>(), milli(0, 60_000_000), milli(0, 5_000_000), milli(0, 1_000_000), milli(-40_000, 125_000), milli(0, 100_000), milli(0, 13_000))
        .prop_map(|(pose, ts, voc, co2, smoke, temperature, humidity, battery)| {
            Payload::Sensor(PosedFrame {
                pose,
                frame: SensorFrame { timestamp: ts as u64, voc, co2, smoke, temperature, humidity, battery },
            })
        })
}

fn map() -> impl Strategy<Value = Payload> {
    prop::collection::vec((milli(-1_000_000, 10_000_000), milli(-1_000_000, 10_000_000), 0usize..500), 0..=MAP_BATCH)
        .prop_map(|v| Payload::Map(MapBatch { points: v.into_iter().map(|(x, y, id)| MapPoint::new(x, y, id)).collect() }))
}

fn robot_state() -> impl Strategy<Value = RobotState> {
    prop_oneof![Just(RobotState::Idle), Just(RobotState::Sweeping), Just(RobotState::Homing), Just(RobotState::Halted)]
}

fn status() -> impl Strategy<Value = Payload> {
    (robot_state(), pose(), any::<u32>(), 0usize..10_000, 0usize..100_000, prop::option::of("[a-z_=0-9.]{0,24}"))
        .prop_map(|(robot_state, pose, ms, frames, points, detail)| {
            Payload::Status(Status { robot_state, pose, mission_ms: ms as u64, frames, points, detail })
        })
}

fn wall_model() -> impl Strategy<Value = Payload> {
    let line = (any::<bool>(), milli(0, 10_000_000), -1e-2..1e-2f64, 0usize..2000, milli(0, 5_000_000), milli(0, 5_000_000))
        .prop_map(|(h, a, b, support, e0, e1)| LineModel {
            orientation: if h { Orientation::Horizontal } else { Orientation::Vertical },
            a,
            b,
            support,
            extent: [e0.min(e1), e0.max(e1)],
        });
    (prop::collection::vec(line, 4..8), prop::collection::vec((milli(0, 10_000_000), milli(0, 10_000_000)), 4..8))
        .prop_map(|(lines, corners)| {
            let corners: Vec<Point> = corners.into_iter().map(|(x, y)| Point::new(x, y)).collect();
            let n = corners.len();
            let wall_lengths = (0..n).map(|i| aeromap_core::units::quantize(corners[i].distance(&corners[(i + 1) % n]))).collect();
            Payload::WallModel(WallModel { lines, corners, wall_lengths })
        })
}

fn class() -> impl Strategy<Value = IaqClass> {
    prop_oneof![Just(IaqClass::Good), Just(IaqClass::Moderate), Just(IaqClass::Poor)]
}

fn classification() -> impl Strategy<Value = Payload> {
    (any::<u32>(), class(), prop::option::of(milli(0, 100_000)), any::<bool>(), prop::collection::btree_map(class(), 0.0..=1.0f64, 0..3), prop::collection::vec(prop_oneof![Just(InputVar::Co2), Just(InputVar::Humidity)], 0..2))
        .prop_map(|(ts, class, crisp_score, fallback, term_strengths, clamped)| {
            Payload::Classification(ClassificationReport {
                timestamp: ts as u64,
                class,
                crisp_score,
                fallback,
                term_strengths: term_strengths.into_iter().collect::<BTreeMap<_, _>>(),
                clamped,
            })
        })
}

fn ack_or_error() -> impl Strategy<Value = Payload> {
    prop_oneof![
        ("[a-z_]{1,10}", prop::option::of("[ -~]{0,30}")).prop_map(|(command, detail)| Payload::Ack(Ack { command, detail })),
        ("[a-z_]{1,12}", "[ -~]{0,40}").prop_map(|(code, message)| Payload::Error(ErrorBody { code, message })),
    ]
}

fn frame() -> impl Strategy<Value = Frame> {
    (any::<u64>(), any::<u32>(), prop_oneof![sensor(), map(), status(), wall_model(), classification(), ack_or_error()])
        .prop_map(|(seq, t, payload)| Frame::new(seq, t as u64, payload))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn decode_inverts_encode(f in frame()) {
        let text = encode_frame(&f);
        let back = decode_frame(&text).unwrap();
        prop_assert_eq!(&back, &f);
        prop_assert_eq!(encode_frame(&back), text);
    }
}

proptest! {
    #[test]
    fn unquantized_frames_settle_after_one_trip(x in -1e7..1e7f64, y in -1e7..1e7f64) {
        let f = Frame::new(1, 0, Payload::Map(MapBatch { points: vec![MapPoint::new(x, y, 0)] }));
        let once = decode_frame(&encode_frame(&f)).unwrap();
        prop_assert_eq!(&once, &f.quantized());
        prop_assert_eq!(decode_frame(&encode_frame(&once)).unwrap(), once);
    }

    #[test]
    fn commands_round_trip(l in 100u32..2000, s in 100u32..2000, k in 0usize..5, inc in 1u32..10) {
        let plan = SweepPlan { lane_spacing_mm: l as f64, sample_spacing_mm: s as f64, scan_every: k, scan_increment_deg: inc };
        for c in [Command::Start, Command::Stop, Command::Home, Command::Ping, Command::Download, Command::SetPlan { plan }] {
            prop_assert_eq!(decode_command(&encode_command(&c)).unwrap(), c);
        }
    }
}

#[test]
fn keys_are_sorted_at_every_level() {
    fn check(v: &serde_json::Value) {
        if let Some(obj) = v.as_object() {
            let keys: Vec<&String> = obj.keys().collect();
            let mut sorted = keys.clone();
            sorted.sort();
            assert_eq!(keys, sorted);
            obj.values().for_each(check);
        } else if let Some(arr) = v.as_array() {
            arr.iter().for_each(check);
        }
    }
    let f = Frame::new(
        9,
        1,
        Payload::Sensor(PosedFrame {
            pose: Pose::new(1.0, 2.0, 3.0),
            frame: SensorFrame { timestamp: 1, voc: 1.0, co2: 2.0, smoke: 3.0, temperature: 4.0, humidity: 5.0, battery: 6.0 },
        }),
    );
    let text = encode_frame(&f);
    // re-parse preserving the order in the text
    let mut de = serde_json::Deserializer::from_str(&text);
    let v: serde_json::Value = serde::Deserialize::deserialize(&mut de).unwrap();
    check(&v);
    assert!(text.starts_with(r#"{"payload":{"frame":{"battery":6.0,"co2":2.0"#), "{text}");
}
