//! Built-in experiment configs, addressed as `preset:NAME`.

const PRESETS: [(&str, &str); 6] = [
    (
        "cor1_theta25_alpha50",
        include_str!("../presets/cor1_theta25_alpha50.toml"),
    ),
    (
        "cor1_theta50_alpha50",
        include_str!("../presets/cor1_theta50_alpha50.toml"),
    ),
    (
        "thm2_even_box",
        include_str!("../presets/thm2_even_box.toml"),
    ),
    (
        "thm2_interior_flatbottom",
        include_str!("../presets/thm2_interior_flatbottom.toml"),
    ),
    (
        "thm4_reparam_quadratic",
        include_str!("../presets/thm4_reparam_quadratic.toml"),
    ),
    (
        "dgp_vs_cgp_ball",
        include_str!("../presets/dgp_vs_cgp_ball.toml"),
    ),
];

pub fn names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

pub fn get(name: &str) -> Option<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}
