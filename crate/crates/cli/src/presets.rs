//! Configs shipped with the binary; also available as files under `presets/`.

const PRESETS: &[(&str, &str)] = &[
    ("p1_buffer", include_str!("../presets/p1_buffer.toml")),
    ("p1_soft_multinet", include_str!("../presets/p1_soft_multinet.toml")),
    ("p1_soft_phi", include_str!("../presets/p1_soft_phi.toml")),
    ("p1_window", include_str!("../presets/p1_window.toml")),
    ("p1_window_beta2_k1", include_str!("../presets/p1_window_beta2_k1.toml")),
    ("p2_buffer", include_str!("../presets/p2_buffer.toml")),
    ("p2_soft_multinet", include_str!("../presets/p2_soft_multinet.toml")),
    ("p2_soft_phi", include_str!("../presets/p2_soft_phi.toml")),
    ("p2_window", include_str!("../presets/p2_window.toml")),
    ("p3_buffer", include_str!("../presets/p3_buffer.toml")),
    ("p3_soft_multinet", include_str!("../presets/p3_soft_multinet.toml")),
    ("p3_soft_phi", include_str!("../presets/p3_soft_phi.toml")),
    ("p3_window", include_str!("../presets/p3_window.toml")),
    ("p4_buffer", include_str!("../presets/p4_buffer.toml")),
    ("p4_soft_multinet", include_str!("../presets/p4_soft_multinet.toml")),
    ("p4_soft_phi", include_str!("../presets/p4_soft_phi.toml")),
    ("p4_window", include_str!("../presets/p4_window.toml")),
    ("p4_window_fullhard", include_str!("../presets/p4_window_fullhard.toml")),
    ("sweep_beta", include_str!("../presets/sweep_beta.toml")),
    ("sweep_init_p1_buffer", include_str!("../presets/sweep_init_p1_buffer.toml")),
    ("sweep_init_p1_window", include_str!("../presets/sweep_init_p1_window.toml")),
    ("sweep_init_p2_buffer", include_str!("../presets/sweep_init_p2_buffer.toml")),
    ("sweep_init_p2_window", include_str!("../presets/sweep_init_p2_window.toml")),
    ("sweep_init_p3_buffer", include_str!("../presets/sweep_init_p3_buffer.toml")),
    ("sweep_init_p3_window", include_str!("../presets/sweep_init_p3_window.toml")),
    ("sweep_seed", include_str!("../presets/sweep_seed.toml")),
    ("sweep_window_k", include_str!("../presets/sweep_window_k.toml")),
];

pub fn get(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|p| p.0 == name).map(|p| p.1)
}

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|p| p.0)
}
