pub mod oracle;

use photolith::instgen::{generate_instance, EquipmentScenario, GenConfig, ReadyScenario};
use photolith::Instance;

/// A generated instance; the seed picks the remaining factors too.
pub fn instance(n: usize, equipment: EquipmentScenario, seed: u64) -> Instance {
    let ready = if seed % 2 == 0 { ReadyScenario::AllZero } else { ReadyScenario::Mixed30_70 };
    let tardiness = if seed % 3 == 0 { 0.6 } else { 0.3 };
    let range = if seed % 5 < 2 { 2.5 } else { 0.5 };
    generate_instance(&GenConfig { n, ready, tardiness, range, equipment, seed }).unwrap()
}
