//! Built-in figure presets, embedded from `presets/*.toml`.

pub const PRESETS: &[(&str, &str)] = &[
    ("fig3", include_str!("../presets/fig3.toml")),
    ("fig3c", include_str!("../presets/fig3c.toml")),
    ("fig9", include_str!("../presets/fig9.toml")),
    ("fig10", include_str!("../presets/fig10.toml")),
    ("fig11", include_str!("../presets/fig11.toml")),
    ("fig12", include_str!("../presets/fig12.toml")),
    ("fig13", include_str!("../presets/fig13.toml")),
    ("fig14", include_str!("../presets/fig14.toml")),
    ("fig15", include_str!("../presets/fig15.toml")),
    ("fig17", include_str!("../presets/fig17.toml")),
    ("fig18", include_str!("../presets/fig18.toml")),
    ("fig21", include_str!("../presets/fig21.toml")),
    ("fig23", include_str!("../presets/fig23.toml")),
];

/// Text of the preset called `name`.
pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}
