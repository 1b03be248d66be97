//! Example surfaces shipped with the crate.

use crate::surface::FlatSurface;

macro_rules! bundled {
    ($($name:ident => $file:literal),* $(,)?) => {
        /// Names accepted by [`by_name`].
        pub const NAMES: &[&str] = &[$(stringify!($name)),*];

        $(
            pub fn $name() -> FlatSurface {
                FlatSurface::from_json(include_str!(concat!("../data/", $file))).expect("bundled surface is valid")
            }
        )*

        /// Raw JSON of a bundled surface.
        pub fn json(name: &str) -> Option<&'static str> {
            match name {
                $(stringify!($name) => Some(include_str!(concat!("../data/", $file))),)*
                _ => None,
            }
        }
    };
}

bundled! {
    square_torus => "square_torus.json",
    square_torus_marked => "square_torus_marked.json",
    square_torus_two_marked => "square_torus_two_marked.json",
    two_by_one_torus => "two_by_one_torus.json",
    octagon => "octagon.json",
    octagon_quotient => "octagon_quotient.json",
    pillowcase => "pillowcase.json",
    folded_square => "folded_square.json",
    q1111 => "q1111.json",
}

pub fn by_name(name: &str) -> Option<FlatSurface> {
    json(name).map(|t| FlatSurface::from_json(t).expect("bundled surface is valid"))
}
