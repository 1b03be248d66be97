//! JSON interchange format for polygon gluings.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RawPolygon {
    pub vertices: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RawGluing {
    pub from: [usize; 2],
    pub to: [usize; 2],
    pub sign: i8,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RawMarkedPoint {
    pub polygon: usize,
    pub position: [f64; 2],
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RawSurface {
    pub polygons: Vec<RawPolygon>,
    pub gluings: Vec<RawGluing>,
    #[serde(default)]
    pub marked_points: Vec<RawMarkedPoint>,
}
