use rand::Rng;

use super::{apply_noise, Channel, Pose, SensorFrame, SimError, Species, World};
use crate::geometry::Point;
use crate::units::quantize;

/// Noise-free concentration of `species` at `p`: ambient plus one isotropic
/// Gaussian plume per matching source, centred at `position + drift`.
pub fn gas_field(world: &World, p: &Point, species: Species) -> Result<f64, SimError> {
    if !world.room.contains(p) {
        return Err(SimError::OutsideRoom { x: p.x, y: p.y });
    }
    let plume: f64 = world
        .gas_sources
        .iter()
        .filter(|s| s.species == species)
        .map(|s| {
            let cx = s.position.x + s.drift_mm.x;
            let cy = s.position.y + s.drift_mm.y;
            let d2 = (p.x - cx).powi(2) + (p.y - cy).powi(2);
            s.amplitude * (-d2 / (2.0 * s.spread_mm * s.spread_mm)).exp()
        })
        .sum();
    Ok(world.ambient.species(species) + plume)
}

/// Range (mm) from the pose along an absolute bearing to the nearest wall.
pub fn sense_distance<R: Rng + ?Sized>(
    world: &World,
    pose: &Pose,
    bearing_deg: f64,
    noise_on: bool,
    rng: &mut R,
) -> Result<f64, SimError> {
    let origin = pose.position();
    if !world.room.contains(&origin) {
        return Err(SimError::OutsideRoom { x: origin.x, y: origin.y });
    }
    let range = world
        .room
        .ray_cast(&origin, bearing_deg)
        .ok_or(SimError::NoHit { x: origin.x, y: origin.y, bearing: bearing_deg })?;
    if noise_on {
        Ok(apply_noise(
            range,
            world.noise.distance,
            Channel::Distance.physical_range(),
            rng,
        ))
    } else {
        Ok(range)
    }
}

/// Reads every environmental channel at the pose, stamped with `t_ms`.
pub fn sense_gas<R: Rng + ?Sized>(
    world: &World,
    pose: &Pose,
    noise_on: bool,
    rng: &mut R,
    t_ms: u64,
) -> Result<SensorFrame, SimError> {
    let p = pose.position();
    let truth = [
        (Channel::Voc, gas_field(world, &p, Species::Voc)?),
        (Channel::Co2, gas_field(world, &p, Species::Co2)?),
        (Channel::Smoke, gas_field(world, &p, Species::Smoke)?),
        (Channel::Temperature, world.ambient.temperature),
        (Channel::Humidity, world.ambient.humidity),
        (Channel::Battery, world.battery.voltage_at(t_ms)),
    ];
    let mut read = [0.0; 6];
    for (slot, (channel, value)) in read.iter_mut().zip(truth) {
        let v = if noise_on {
            apply_noise(value, world.noise.get(channel), channel.physical_range(), rng)
        } else {
            value
        };
        *slot = quantize(v);
    }
    Ok(SensorFrame {
        timestamp: t_ms,
        voc: read[0],
        co2: read[1],
        smoke: read[2],
        temperature: read[3],
        humidity: read[4],
        battery: read[5],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Room;
    use crate::sim::{Ambient, GasSource};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn co2_world() -> World {
        let mut w = World::new(Room::rectangle(20_000.0, 20_000.0).unwrap());
        w.ambient = Ambient { co2: 400.0, ..Ambient::default() };
        w.gas_sources.push(GasSource {
            position: Point::new(5000.0, 5000.0),
            species: Species::Co2,
            amplitude: 600.0,
            spread_mm: 500.0,
            drift_mm: Point::default(),
        });
        w
    }

    #[test]
    fn gas_field_at_source_centre() {
        let w = co2_world();
        assert_eq!(gas_field(&w, &Point::new(5000.0, 5000.0), Species::Co2).unwrap(), 1000.0);
    }

    #[test]
    fn gas_field_far_tail_is_ambient() {
        let w = co2_world();
        let v = gas_field(&w, &Point::new(15_000.0, 5000.0), Species::Co2).unwrap();
        assert!((v - 400.0).abs() < 1e-6);
    }

    #[test]
    fn gas_field_one_sigma_away() {
        // 400 + 600·e^-0.5 = 763.918395827580054...
        let w = co2_world();
        let v = gas_field(&w, &Point::new(5500.0, 5000.0), Species::Co2).unwrap();
        assert!((v - 763.918_395_827_580_05).abs() < 1e-9);
    }

    #[test]
    fn gas_field_follows_drift() {
        let mut w = co2_world();
        w.gas_sources[0].drift_mm = Point::new(300.0, -200.0);
        assert_eq!(gas_field(&w, &Point::new(5300.0, 4800.0), Species::Co2).unwrap(), 1000.0);
        // other species see only ambient
        assert_eq!(gas_field(&w, &Point::new(5300.0, 4800.0), Species::Voc).unwrap(), 100.0);
    }

    #[test]
    fn gas_field_outside_is_domain_error() {
        let w = co2_world();
        assert!(matches!(
            gas_field(&w, &Point::new(-1.0, 5.0), Species::Co2),
            Err(SimError::OutsideRoom { .. })
        ));
    }

    #[test]
    fn noiseless_ranges_from_centre() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let w = World::new(Room::rectangle(4000.0, 3000.0).unwrap());
        let c = Pose::new(2000.0, 1500.0, 0.0);
        assert_eq!(sense_distance(&w, &c, 0.0, false, &mut rng).unwrap(), 2000.0);
        assert_eq!(sense_distance(&w, &c, 90.0, false, &mut rng).unwrap(), 1500.0);
        let sq = World::new(Room::rectangle(4000.0, 4000.0).unwrap());
        let c = Pose::new(2000.0, 2000.0, 0.0);
        // 2000·√2 by hand
        let r = sense_distance(&sq, &c, 45.0, false, &mut rng).unwrap();
        assert!((r - 2828.427_124_746_19).abs() < 1e-9);
    }

    #[test]
    fn noiseless_frame_is_ambient_without_sources() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let w = World::new(Room::rectangle(4000.0, 3000.0).unwrap());
        let f = sense_gas(&w, &Pose::new(100.0, 100.0, 0.0), false, &mut rng, 0).unwrap();
        let a = w.ambient;
        assert_eq!(
            (f.voc, f.co2, f.smoke, f.temperature, f.humidity, f.battery),
            (a.voc, a.co2, a.smoke, a.temperature, a.humidity, 12.6)
        );
    }

    #[test]
    fn noiseless_frame_at_source() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let w = co2_world();
        let f = sense_gas(&w, &Pose::new(5000.0, 5000.0, 0.0), false, &mut rng, 10).unwrap();
        assert_eq!(f.co2, 1000.0);
        assert_eq!(f.timestamp, 10);
    }
}
