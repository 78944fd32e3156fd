use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct LatticePoint {
    pub x: i64,
    pub y: i64,
}

impl LatticePoint {
    pub const ORIGIN: LatticePoint = LatticePoint { x: 0, y: 0 };

    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    pub fn l1(&self) -> u64 {
        self.x.unsigned_abs() + self.y.unsigned_abs()
    }

    pub fn norm_sq(&self) -> f64 {
        let (x, y) = (self.x as f64, self.y as f64);
        x * x + y * y
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Parity of `x + y`; a walk alternates parity every step.
    pub fn parity(&self) -> u64 {
        (self.x + self.y).rem_euclid(2) as u64
    }

    pub fn add(self, other: LatticePoint) -> Self {
        Self::new(self.x + other.x, self.y + other.y)
    }

    pub fn sub(self, other: LatticePoint) -> Self {
        Self::new(self.x - other.x, self.y - other.y)
    }

    pub fn step(self, s: Step) -> Self {
        self.add(s.delta())
    }
}

impl std::fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Step {
    East,
    North,
    West,
    South,
}

impl Step {
    pub const ALL: [Step; 4] = [Step::East, Step::North, Step::West, Step::South];

    pub fn from_bits(b: u64) -> Self {
        Self::ALL[(b & 3) as usize]
    }

    pub fn delta(self) -> LatticePoint {
        match self {
            Step::East => LatticePoint::new(1, 0),
            Step::North => LatticePoint::new(0, 1),
            Step::West => LatticePoint::new(-1, 0),
            Step::South => LatticePoint::new(0, -1),
        }
    }

    /// Step with rotated increments `(du, dv)` where `u = x + y`, `v = x - y`.
    pub fn from_rotated(du: i64, dv: i64) -> Self {
        match (du, dv) {
            (1, 1) => Step::East,
            (-1, -1) => Step::West,
            (1, -1) => Step::North,
            (-1, 1) => Step::South,
            _ => unreachable!("rotated increments must be +-1"),
        }
    }
}
