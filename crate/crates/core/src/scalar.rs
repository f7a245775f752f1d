//! Scalar types for order functions.
//!
//! Lattice structure never touches numbers; only the order function `|·|`
//! does. Anything that behaves like a non-negative number with `+` and a
//! (partial) comparison can serve: integers for graph separations, exact
//! rationals for hand-built tables, floats if someone insists.

use std::cmp::Ordering;
use std::fmt::Debug;

use num_traits::Num;

use crate::universe::UId;

pub trait OrderScalar: Num + PartialOrd + Clone + Debug + Send + Sync {
    /// Total comparison used for deterministic sorting; incomparable values
    /// (NaN) collapse to `Equal` and the caller breaks ties by id.
    fn total_cmp(&self, other: &Self) -> Ordering {
        self.partial_cmp(other).unwrap_or(Ordering::Equal)
    }

    fn is_non_negative(&self) -> bool {
        *self >= Self::zero()
    }
}

impl<T: Num + PartialOrd + Clone + Debug + Send + Sync> OrderScalar for T {}

/// An order function `|·|` on the elements of a universe.
pub trait OrderFunction: Send + Sync {
    type Scalar: OrderScalar;

    fn order(&self, x: UId) -> Self::Scalar;
}

/// Wraps a plain closure as an order function.
pub struct FnOrder<W, F> {
    f: F,
    _w: std::marker::PhantomData<fn() -> W>,
}

impl<W, F> FnOrder<W, F>
where
    W: OrderScalar,
    F: Fn(UId) -> W + Send + Sync,
{
    pub fn new(f: F) -> Self {
        FnOrder {
            f,
            _w: std::marker::PhantomData,
        }
    }
}

impl<W, F> OrderFunction for FnOrder<W, F>
where
    W: OrderScalar,
    F: Fn(UId) -> W + Send + Sync,
{
    type Scalar = W;

    fn order(&self, x: UId) -> W {
        (self.f)(x)
    }
}
