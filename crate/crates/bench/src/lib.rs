//! Workloads shared by the planner benchmarks.

use pathplan_core::{
    LinkProfile, RewardConfig, Scenario, SearchConfig, ServiceProfile, SyntheticOracle,
};

/// Local model with heavy middle blocks and a faster host, `n` blocks each.
pub fn scenario(n: usize) -> Scenario {
    let local: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            if i == 0 || i + 1 == n {
                (5e-5, 2e-5)
            } else {
                (2e-4, 2e-3)
            }
        })
        .collect();
    let host = vec![(1e-3, 5e-4); n];
    let mut sc = Scenario::new(
        format!("bench-{n}"),
        ServiceProfile::from_costs("local", &local, 32, 0.867),
        Some(ServiceProfile::from_costs("host", &host, 32, 0.8)),
        8,
    );
    sc.entry_link = LinkProfile::on_host(5e-4, 5e-5);
    sc.exit_link = LinkProfile::on_host(5e-4, 5e-5);
    sc.skip_link = LinkProfile::on_local(2e-4, 2e-5);
    sc
}

pub fn oracle() -> SyntheticOracle {
    SyntheticOracle::new(0.85, 0.3, 0.2, 0.005, 11).expect("valid parameters")
}

pub fn search_config() -> SearchConfig {
    SearchConfig::new(
        RewardConfig::new(100.0, 0.84).expect("valid reward"),
        0.01,
        3,
    )
}
