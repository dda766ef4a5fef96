use super::{Matrix, ParamStore, Scalar};

/// Central finite differences of `loss` with respect to every parameter
/// entry in `store`: `(f(w + h) - f(w - h)) / 2h`.
///
/// Parameters are restored to their original values before returning.
pub fn central_differences<T, E>(
    store: &mut ParamStore<T>,
    h: T,
    mut loss: impl FnMut(&ParamStore<T>) -> Result<T, E>,
) -> Result<Vec<Matrix<T>>, E>
where
    T: Scalar,
{
    let two_h = h + h;
    let ids: Vec<_> = store.ids().collect();
    let mut out = Vec::with_capacity(ids.len());
    for id in ids {
        let (r, c) = store.value(id).shape();
        let mut g = Matrix::zeros(r, c);
        for k in 0..r * c {
            let orig = store.value(id).as_slice()[k];
            store.get_mut(id).value.as_mut_slice()[k] = orig + h;
            let up = loss(store);
            store.get_mut(id).value.as_mut_slice()[k] = orig - h;
            let down = loss(store);
            store.get_mut(id).value.as_mut_slice()[k] = orig;
            g.as_mut_slice()[k] = (up? - down?) / two_h;
        }
        out.push(g);
    }
    Ok(out)
}

/// `|a - b| / max(|a|, |b|, floor)`.
///
/// The floor keeps the ratio meaningful when both gradients are near zero,
/// where finite differences are dominated by rounding noise.
pub fn relative_error<T: Scalar>(a: T, b: T, floor: T) -> T {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}
