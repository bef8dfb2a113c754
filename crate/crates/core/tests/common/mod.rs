//! Shared benchmark scenario for integration tests.

use std::sync::Arc;

use evcon_core::{
    benchmark_dynamics, benchmark_reference, AgentInit, ControllerGains, ObserverGains,
    RbfConfig, Scenario, Strategy, Topology, TriggerConfig,
};

pub fn benchmark_trigger(strategy: Strategy) -> TriggerConfig {
    TriggerConfig {
        strategy,
        pi: 2.5,
        pi_bar: 4.0,
        mu: 5.4,
        delta: 0.245,
        pi_star: 2.0,
        pi_bar_star: 4.0,
        gate: 6.0,
        period: 0.001,
    }
}

pub fn benchmark_scenario(strategy: Strategy, t_end: f64) -> Scenario {
    let adjacency = vec![
        vec![0, 1, 0, 0],
        vec![0, 0, 0, 0],
        vec![0, 1, 0, 0],
        vec![1, 0, 0, 0],
    ];
    Scenario {
        topology: Topology::new(&adjacency, &[0.0, 1.0, 0.0, 0.0]).unwrap(),
        plant: Arc::new(benchmark_dynamics()),
        reference: Arc::new(benchmark_reference()),
        observer: ObserverGains::new(&[350.0, 0.5], &[2.0, 2.0]).unwrap(),
        controller: ControllerGains::new(
            vec![-100.0, -100.0],
            vec![100.0, 100.0],
            vec![0.01, 0.01],
            vec![50.0, 50.0],
            vec![0.005],
            120.0,
            25.0,
        )
        .unwrap(),
        rbf: RbfConfig::default(),
        trigger: benchmark_trigger(strategy),
        init: vec![
            AgentInit {
                x0: vec![0.2, 0.0],
                xhat0: vec![0.3, 1.7],
            },
            AgentInit {
                x0: vec![-0.2, 0.0],
                xhat0: vec![-0.5, 1.7],
            },
            AgentInit {
                x0: vec![0.1, 0.0],
                xhat0: vec![0.0, -4.0],
            },
            AgentInit {
                x0: vec![-0.3, 0.0],
                xhat0: vec![0.0, -4.0],
            },
        ],
        t_end,
        dt: 0.001,
        log_stride: 1,
        bound_ceiling: 1e3,
    }
}
