//! Order functions on universes: submodularity of `|·|` and the systems
//! `S_k` of separations of order less than `k`.

use std::sync::Arc;

use crate::error::{Error, Result, Verdict};
use crate::scalar::{OrderFunction, OrderScalar};
use crate::system::{Frame, SeparationSystem};
use crate::universe::{UId, Universe};

/// Checks `|r ∨ s| + |r ∧ s| <= |r| + |s|` for all pairs from `elems`
/// (joins and meets are taken in the universe). Returns the first violating
/// pair in the given order.
pub fn check_order_submodular<O>(u: &dyn Universe, ord: &O, elems: &[UId]) -> Verdict<(UId, UId)>
where
    O: OrderFunction + ?Sized,
{
    for (i, &r) in elems.iter().enumerate() {
        for &s in &elems[i..] {
            let lhs = ord.order(u.join(r, s)) + ord.order(u.meet(r, s));
            let rhs = ord.order(r) + ord.order(s);
            if lhs > rhs {
                return Err((r, s));
            }
        }
    }
    Ok(())
}

/// Checks that `|s| = |s̄|` and `|s| >= 0` on `elems`.
pub fn check_order_symmetric<O>(u: &dyn Universe, ord: &O, elems: &[UId]) -> Result<()>
where
    O: OrderFunction + ?Sized,
{
    for &x in elems {
        let w = ord.order(x);
        if !w.is_non_negative() {
            return Err(Error::input(format!("negative order at {}", u.label(x))));
        }
        if w != ord.order(u.invert(x)) {
            return Err(Error::input(format!("order differs between {} and its inverse", u.label(x))));
        }
    }
    Ok(())
}

/// `S_k := { s : |s| < k }` over the candidate elements `elems`, in a frame
/// ordered by `(|s|, id)`.
pub fn induced_sk<O>(universe: Arc<dyn Universe>, ord: &O, elems: &[UId], k: O::Scalar) -> Result<SeparationSystem>
where
    O: OrderFunction + ?Sized,
{
    let kept: Vec<UId> = elems.iter().copied().filter(|&x| ord.order(x) < k).collect();
    let frame = Frame::with_order(universe, &kept, |x| ord.order(x))?;
    Ok(SeparationSystem::full(frame))
}

/// Orders of all members of `s`, indexed by id.
pub fn orders_of<O>(s: &SeparationSystem, ord: &O) -> Vec<O::Scalar>
where
    O: OrderFunction + ?Sized,
{
    (0..s.frame().len()).map(|x| ord.order(s.uid(x))).collect()
}
