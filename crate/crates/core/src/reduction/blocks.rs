//! Sign-compatible particle sets for the mixed third-order moments.
//!
//! Each set reproduces exactly one target moment and cancels in every other
//! moment of order three or less, apart from the unavoidable contributions to
//! mass, the pure second moments and (for the `M120`-type pairs) the first
//! and pure third moments. Those are absorbed by the axis blocks.

use crate::ensemble::{MomentKey, WeightedParticle};

/// Unit sign of a nonzero moment; zero maps to `+1`.
pub(crate) fn unit_sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }

    /// The two remaining axes in increasing order.
    pub fn others(self) -> [Axis; 2] {
        match self {
            Axis::X => [Axis::Y, Axis::Z],
            Axis::Y => [Axis::X, Axis::Z],
            Axis::Z => [Axis::X, Axis::Y],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AxisPair {
    XY,
    XZ,
    YZ,
}

impl AxisPair {
    pub const ALL: [AxisPair; 3] = [AxisPair::XY, AxisPair::XZ, AxisPair::YZ];

    pub fn axes(self) -> (Axis, Axis) {
        match self {
            AxisPair::XY => (Axis::X, Axis::Y),
            AxisPair::XZ => (Axis::X, Axis::Z),
            AxisPair::YZ => (Axis::Y, Axis::Z),
        }
    }

    /// `M11`, `M12`, `M21` of the pair, where `M12` is first-axis power one
    /// and second-axis power two (for xy: `M110`, `M120`, `M210`).
    pub fn moment_keys(self) -> [MomentKey; 3] {
        let (a, b) = self.axes();
        let key = |pa: u32, pb: u32| {
            let mut e = [0; 3];
            e[a.index()] = pa;
            e[b.index()] = pb;
            MomentKey::new(e[0], e[1], e[2])
        };
        [key(1, 1), key(1, 2), key(2, 1)]
    }
}

/// Four particles carrying `M111`, one in each octant compatible with its
/// sign, each with a quarter of `|M111| / s_quad^3`. Empty when `M111 = 0`.
pub fn solve_quadruplet(m111: f64, s_quad: f64) -> Vec<WeightedParticle> {
    if m111 == 0.0 {
        return Vec::new();
    }
    let alpha = unit_sign(m111);
    let weight = m111.abs() / (4.0 * s_quad.powi(3));
    [
        [alpha, 1.0, 1.0],
        [-alpha, -1.0, 1.0],
        [-alpha, 1.0, -1.0],
        [alpha, -1.0, -1.0],
    ]
    .into_iter()
    .map(|dir| WeightedParticle {
        velocity: dir.map(|c| c * s_quad),
        weight,
    })
    .collect()
}

/// Twin pairs in the plane of `pair` for its three mixed moments
/// `(M11, M12, M21)`. A pair is omitted when its moment is zero.
pub fn solve_twins(pair: AxisPair, moments: [f64; 3], s_twin: f64) -> Vec<WeightedParticle> {
    let (a, b) = pair.axes();
    let place = |ca: f64, cb: f64, weight: f64| {
        let mut velocity = [0.0; 3];
        velocity[a.index()] = ca * s_twin;
        velocity[b.index()] = cb * s_twin;
        WeightedParticle { velocity, weight }
    };
    let [m11, m12, m21] = moments;
    let mut out = Vec::with_capacity(6);
    if m11 != 0.0 {
        let alpha = unit_sign(m11);
        let w = m11.abs() / (2.0 * s_twin.powi(2));
        out.push(place(alpha, 1.0, w));
        out.push(place(-alpha, -1.0, w));
    }
    if m12 != 0.0 {
        let alpha = unit_sign(m12);
        let w = m12.abs() / (2.0 * s_twin.powi(3));
        out.push(place(alpha, 1.0, w));
        out.push(place(alpha, -1.0, w));
    }
    if m21 != 0.0 {
        let alpha = unit_sign(m21);
        let w = m21.abs() / (2.0 * s_twin.powi(3));
        out.push(place(1.0, alpha, w));
        out.push(place(-1.0, alpha, w));
    }
    out
}
