use num_complex::Complex64;

use super::event::{Event, EventKind};
use crate::grid::UniformGrid;
use crate::{Error, Result};

/// The measurement basis a state is expanded in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Basis {
    /// Orthonormal basis of a finite-dimensional space.
    Discrete { dim: usize },
    /// Position samples on one axis, quadrature weight `dx`.
    Grid1D(UniformGrid),
    /// Position samples on a product grid, row-major in `(x, y)`, weight `dx * dy`.
    Grid2D(UniformGrid, UniformGrid),
}

impl Basis {
    pub fn len(&self) -> usize {
        match self {
            Basis::Discrete { dim } => *dim,
            Basis::Grid1D(g) => g.len(),
            Basis::Grid2D(gx, gy) => gx.len() * gy.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quadrature weight attached to each basis element.
    pub fn cell_measure(&self) -> f64 {
        match self {
            Basis::Discrete { .. } => 1.0,
            Basis::Grid1D(g) => g.dx(),
            Basis::Grid2D(gx, gy) => gx.dx() * gy.dx(),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Basis::Discrete { .. } => "a discrete basis",
            Basis::Grid1D(_) => "a 1D grid",
            Basis::Grid2D(..) => "a 2D grid",
        }
    }

    /// Indicator of the full sample space.
    pub fn omega(&self) -> Indicator {
        Indicator { mask: vec![true; self.len()] }
    }
}

/// Diagonal 0/1 projector `I_A` in a fixed basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Indicator {
    mask: Vec<bool>,
}

impl Indicator {
    /// Maps `event` onto `basis`.
    ///
    /// Interval events select grid cells whose center lies in the closed
    /// interval. On grids a `DiscreteSet` names individual cells.
    pub fn new(event: &Event, basis: &Basis) -> Result<Self> {
        let mask = match basis {
            Basis::Discrete { dim } => match event.kind() {
                EventKind::DiscreteSet(_) | EventKind::GridMask(_) => axis_mask(event, *dim, None)?,
                _ => return Err(unsupported(event, basis)),
            },
            Basis::Grid1D(g) => match event.kind() {
                EventKind::Product(_) | EventKind::FockPredicate(_) => return Err(unsupported(event, basis)),
                _ => axis_mask(event, g.len(), Some(g))?,
            },
            Basis::Grid2D(gx, gy) => match event.kind() {
                EventKind::GridMask(flags) => {
                    check_len(gx.len() * gy.len(), flags.len())?;
                    flags.clone()
                }
                EventKind::Product(axes) if axes.len() == 2 => {
                    let mx = axis_mask(&axes[0], gx.len(), Some(gx))?;
                    let my = axis_mask(&axes[1], gy.len(), Some(gy))?;
                    mx.iter().flat_map(|&a| my.iter().map(move |&b| a && b)).collect()
                }
                EventKind::Product(axes) => {
                    return Err(Error::DimensionMismatch { expected: 2, found: axes.len() })
                }
                _ => return Err(unsupported(event, basis)),
            },
        };
        Ok(Self { mask })
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        Self { mask }
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.mask[i]
    }

    /// Operator product `I_A I_B`, which is `I_{A∩B}`.
    pub fn compose(&self, other: &Indicator) -> Result<Indicator> {
        check_len(self.len(), other.len())?;
        Ok(Indicator { mask: self.mask.iter().zip(&other.mask).map(|(&a, &b)| a && b).collect() })
    }

    /// `I_A |v⟩`: zeroes every component outside the event.
    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.len(), v.len())?;
        Ok(v.iter().zip(&self.mask).map(|(&c, &m)| if m { c } else { Complex64::new(0.0, 0.0) }).collect())
    }
}

fn unsupported(event: &Event, basis: &Basis) -> Error {
    Error::UnsupportedEvent { event: event.variant_name(), basis: basis.name() }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

fn axis_mask(event: &Event, n: usize, grid: Option<&UniformGrid>) -> Result<Vec<bool>> {
    match event.kind() {
        EventKind::DiscreteSet(indices) => {
            let mut mask = vec![false; n];
            for &i in indices {
                if i >= n {
                    return Err(Error::IndexOutOfRange { index: i, dim: n });
                }
                mask[i] = true;
            }
            Ok(mask)
        }
        EventKind::GridMask(flags) => {
            check_len(n, flags.len())?;
            Ok(flags.clone())
        }
        EventKind::IntervalUnion(list) => match grid {
            Some(g) => Ok(g.points().map(|x| list.iter().any(|iv| iv.contains(x))).collect()),
            None => Err(Error::UnsupportedEvent { event: "IntervalUnion", basis: "a discrete basis" }),
        },
        EventKind::Product(_) | EventKind::FockPredicate(_) => {
            Err(Error::UnsupportedEvent { event: event.variant_name(), basis: "a single axis" })
        }
    }
}
