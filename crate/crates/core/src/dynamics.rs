//! Measure-preserving maps of the unit 2-torus.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{apply_pieces, Affine, AffinePiece, ConvexPolygon, Rect};

/// A point `(q, p)` of the torus, always reduced into `[0,1)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    q: f64,
    p: f64,
}

fn reduce(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    // rem_euclid can round up to exactly 1.0 for tiny negative inputs
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

impl PhasePoint {
    pub fn new(q: f64, p: f64) -> Self {
        PhasePoint {
            q: reduce(q),
            p: reduce(p),
        }
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Distance on the torus (max-norm over the wrapped coordinate gaps).
    pub fn torus_distance(&self, other: &PhasePoint) -> f64 {
        let d = |a: f64, b: f64| {
            let x = (a - b).abs();
            x.min(1.0 - x)
        };
        d(self.q, other.q).max(d(self.p, other.p))
    }
}

/// Dynamics of a torus map. Implementations must preserve Lebesgue measure.
pub trait MapDynamics: fmt::Debug + Send + Sync {
    fn step(&self, x: PhasePoint) -> PhasePoint;

    /// All points `y` with `step(y) == x`.
    fn inverse_branches(&self, x: PhasePoint) -> Vec<PhasePoint>;

    fn jacobian(&self, x: PhasePoint) -> Matrix2<f64>;

    /// Affine branches of the forward map, if it is piecewise linear.
    fn forward_pieces(&self) -> Option<Vec<AffinePiece>> {
        None
    }

    /// Affine branches of the inverse map, if it is piecewise linear.
    fn inverse_pieces(&self) -> Option<Vec<AffinePiece>> {
        None
    }
}

#[derive(Debug)]
struct Identity;

#[derive(Debug)]
struct Baker;

#[derive(Debug)]
struct Cat;

fn affine(matrix: [[f64; 2]; 2], shift: [f64; 2]) -> Affine {
    Affine { matrix, shift }
}

impl MapDynamics for Identity {
    fn step(&self, x: PhasePoint) -> PhasePoint {
        x
    }

    fn inverse_branches(&self, x: PhasePoint) -> Vec<PhasePoint> {
        vec![x]
    }

    fn jacobian(&self, _x: PhasePoint) -> Matrix2<f64> {
        Matrix2::identity()
    }

    fn forward_pieces(&self) -> Option<Vec<AffinePiece>> {
        Some(vec![AffinePiece {
            domain: Rect::unit(),
            map: affine([[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0]),
        }])
    }

    fn inverse_pieces(&self) -> Option<Vec<AffinePiece>> {
        self.forward_pieces()
    }
}

// The strip q < 1/2 owns the lower branch; q = 1/2 belongs to the upper one.
impl MapDynamics for Baker {
    fn step(&self, x: PhasePoint) -> PhasePoint {
        let fold = (2.0 * x.q).floor();
        PhasePoint::new(2.0 * x.q - fold, (x.p + fold) / 2.0)
    }

    fn inverse_branches(&self, x: PhasePoint) -> Vec<PhasePoint> {
        if x.p < 0.5 {
            vec![PhasePoint::new(x.q / 2.0, 2.0 * x.p)]
        } else {
            vec![PhasePoint::new((x.q + 1.0) / 2.0, 2.0 * x.p - 1.0)]
        }
    }

    fn jacobian(&self, _x: PhasePoint) -> Matrix2<f64> {
        Matrix2::new(2.0, 0.0, 0.0, 0.5)
    }

    fn forward_pieces(&self) -> Option<Vec<AffinePiece>> {
        Some(vec![
            AffinePiece {
                domain: Rect::new(0.0, 0.5, 0.0, 1.0),
                map: affine([[2.0, 0.0], [0.0, 0.5]], [0.0, 0.0]),
            },
            AffinePiece {
                domain: Rect::new(0.5, 1.0, 0.0, 1.0),
                map: affine([[2.0, 0.0], [0.0, 0.5]], [-1.0, 0.5]),
            },
        ])
    }

    fn inverse_pieces(&self) -> Option<Vec<AffinePiece>> {
        Some(vec![
            AffinePiece {
                domain: Rect::new(0.0, 1.0, 0.0, 0.5),
                map: affine([[0.5, 0.0], [0.0, 2.0]], [0.0, 0.0]),
            },
            AffinePiece {
                domain: Rect::new(0.0, 1.0, 0.5, 1.0),
                map: affine([[0.5, 0.0], [0.0, 2.0]], [0.5, -1.0]),
            },
        ])
    }
}

impl MapDynamics for Cat {
    fn step(&self, x: PhasePoint) -> PhasePoint {
        PhasePoint::new(2.0 * x.q + x.p, x.q + x.p)
    }

    fn inverse_branches(&self, x: PhasePoint) -> Vec<PhasePoint> {
        vec![PhasePoint::new(x.q - x.p, 2.0 * x.p - x.q)]
    }

    fn jacobian(&self, _x: PhasePoint) -> Matrix2<f64> {
        Matrix2::new(2.0, 1.0, 1.0, 1.0)
    }

    fn forward_pieces(&self) -> Option<Vec<AffinePiece>> {
        Some(vec![AffinePiece {
            domain: Rect::unit(),
            map: affine([[2.0, 1.0], [1.0, 1.0]], [0.0, 0.0]),
        }])
    }

    fn inverse_pieces(&self) -> Option<Vec<AffinePiece>> {
        Some(vec![AffinePiece {
            domain: Rect::unit(),
            map: affine([[1.0, -1.0], [-1.0, 2.0]], [0.0, 0.0]),
        }])
    }
}

/// Names accepted by [`make_map`].
pub const MAP_NAMES: [&str; 3] = ["identity", "baker", "cat"];

/// A named, immutable torus map. Cloning shares the underlying dynamics.
#[derive(Debug, Clone)]
pub struct TorusMap {
    name: String,
    dynamics: Arc<dyn MapDynamics>,
}

impl TorusMap {
    pub fn new(name: impl Into<String>, dynamics: Arc<dyn MapDynamics>) -> Self {
        TorusMap {
            name: name.into(),
            dynamics,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn step(&self, x: PhasePoint) -> PhasePoint {
        self.dynamics.step(x)
    }

    pub fn inverse_branches(&self, x: PhasePoint) -> Vec<PhasePoint> {
        self.dynamics.inverse_branches(x)
    }

    pub fn jacobian(&self, x: PhasePoint) -> Matrix2<f64> {
        self.dynamics.jacobian(x)
    }

    /// True when the map has an exact piecewise-affine description.
    pub fn is_linear(&self) -> bool {
        self.dynamics.forward_pieces().is_some()
    }

    pub fn forward_pieces(&self) -> Result<Vec<AffinePiece>> {
        self.dynamics
            .forward_pieces()
            .ok_or_else(|| self.unsupported())
    }

    pub fn inverse_pieces(&self) -> Result<Vec<AffinePiece>> {
        self.dynamics
            .inverse_pieces()
            .ok_or_else(|| self.unsupported())
    }

    fn unsupported(&self) -> Error {
        Error::Unsupported(format!(
            "map `{}` has no piecewise-linear description; exact cell geometry needs one of {:?}",
            self.name, MAP_NAMES
        ))
    }
}

/// Build one of the built-in maps by name.
pub fn make_map(name: &str) -> Result<TorusMap> {
    let dynamics: Arc<dyn MapDynamics> = match name {
        "identity" => Arc::new(Identity),
        "baker" => Arc::new(Baker),
        "cat" => Arc::new(Cat),
        other => {
            return Err(Error::Config(format!(
                "unknown map `{other}`; valid maps are {}",
                MAP_NAMES.join(", ")
            )))
        }
    };
    Ok(TorusMap::new(name, dynamics))
}

impl FromStr for TorusMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        make_map(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub points: Vec<PhasePoint>,
    pub map_name: String,
    pub n_steps: usize,
}

/// Forward orbit `x0, T x0, ..., T^n x0`.
pub fn iterate(map: &TorusMap, x0: PhasePoint, n: usize) -> Trajectory {
    let mut points = Vec::with_capacity(n + 1);
    let mut x = x0;
    points.push(x);
    for _ in 0..n {
        x = map.step(x);
        points.push(x);
    }
    Trajectory {
        points,
        map_name: map.name.clone(),
        n_steps: n,
    }
}

/// `T^{-j}(cell)` as a finite union of convex polygons in `[0,1)^2`.
pub fn preimage_cell(map: &TorusMap, cell: &Rect, j: usize) -> Result<Vec<ConvexPolygon>> {
    let pieces = map.inverse_pieces()?;
    let mut region = vec![cell.to_polygon()];
    for _ in 0..j {
        region = apply_pieces(&pieces, &region);
    }
    Ok(region)
}

/// `T^{j}(region)` for a piecewise-linear map.
pub fn image_region(
    map: &TorusMap,
    region: &[ConvexPolygon],
    j: usize,
) -> Result<Vec<ConvexPolygon>> {
    let pieces = map.forward_pieces()?;
    let mut region = region.to_vec();
    for _ in 0..j {
        region = apply_pieces(&pieces, &region);
    }
    Ok(region)
}
