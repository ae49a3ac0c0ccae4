use proptest::prelude::*;

use mipopt::io::{
    parse_configuration, parse_situation, serialize_configuration, serialize_situation, ComponentConfig,
    ComponentSituation,
};

const CONFIG: &str = include_str!("data/heat_pump/configuration.xml");
const SITUATION: &str = include_str!("data/heat_pump/situation.xml");

proptest! {
    #[test]
    fn configuration_survives_serialization(
        power in 0.1f64..50.0,
        run in 1u32..16,
        off in 1u32..16,
        max_level in 1.0f64..100.0,
        fill in 0.0f64..1.0,
        loss in 0.0f64..0.2,
        supply in 1.0f64..100.0,
    ) {
        let mut c = parse_configuration(CONFIG).unwrap();
        for comp in &mut c.components {
            match comp {
                ComponentConfig::HeatPump(hp) => {
                    hp.electric_power = power;
                    hp.min_run_hours = run as f64 * 0.25;
                    hp.min_off_hours = off as f64 * 0.25;
                }
                ComponentConfig::Storage(b) => {
                    b.max_level = max_level;
                    b.min_level = fill * max_level;
                    b.loss_per_hour = loss;
                }
                ComponentConfig::Grid(g) => g.max_supply = supply,
                _ => {}
            }
        }
        let again = parse_configuration(&serialize_configuration(&c)).unwrap();
        prop_assert_eq!(again, c);
    }

    #[test]
    fn situation_survives_serialization(on in any::<bool>(), since in 1u32..40, level in 0.0f64..20.0) {
        let c = parse_configuration(CONFIG).unwrap();
        let mut s = parse_situation(SITUATION, &c).unwrap();
        for comp in &mut s.components {
            match comp {
                ComponentSituation::HeatPump(hp) => {
                    hp.on_at_begin = on;
                    hp.last_change_hours = since as f64 * 0.25;
                }
                ComponentSituation::Storage(b) => b.initial_level = level,
                _ => {}
            }
        }
        let again = parse_situation(&serialize_situation(&s, &c), &c).unwrap();
        prop_assert_eq!(again, s);
    }
}
