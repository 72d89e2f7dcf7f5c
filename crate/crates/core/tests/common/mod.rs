#![allow(dead_code)]

use std::sync::OnceLock;

use hubcast::simnet::{build_network, simulate, Network, NetworkSpec, ParcelLog, SimConfig};

pub fn demo() -> &'static (Network, ParcelLog) {
    static DEMO: OnceLock<(Network, ParcelLog)> = OnceLock::new();
    DEMO.get_or_init(|| demo_days(30))
}

pub fn demo_days(days: u32) -> (Network, ParcelLog) {
    let net = build_network(&NetworkSpec::demo()).unwrap();
    let mut cfg = SimConfig::demo();
    cfg.horizon_days = days;
    let log = ParcelLog::new(simulate(&net, &cfg).unwrap(), cfg.end_minute());
    (net, log)
}
