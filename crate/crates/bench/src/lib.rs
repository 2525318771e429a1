//! Shared fixtures for the benchmark targets.

use pulsegate_core::calibrate::Scenario;
use pulsegate_core::DeviceSpec;

pub fn aba_device() -> DeviceSpec {
    Scenario::aba().device
}

pub fn aba_scenario() -> Scenario {
    Scenario::aba()
}
