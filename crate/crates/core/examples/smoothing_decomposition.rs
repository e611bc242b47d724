//! Rank-one decomposition `Σ = V D Vᵀ` with a prescribed first column, the
//! quantity `λ₁²` that controls how much smoothing the conditioning buys,
//! and the search over binary selectors.

use smoothbasket::linalg::{best_binary_v, lambda1_sq, rank_one_reduce, SymMatrix};

fn main() -> smoothbasket::Result<()> {
    let s = [0.1099, 0.1677, 0.0365];
    let rho = [[1.0, 0.6, 0.9], [0.6, 1.0, 0.8], [0.9, 0.8, 1.0]];
    let sigma = SymMatrix::from_lower_fn(3, |i, j| s[i] * s[j] * rho[i][j]);

    let dec = rank_one_reduce(&sigma, &[1.0; 3])?;
    println!("lambda^2 for v = 1: {:.5?}", dec.lambda_sq);
    println!("reconstruction error: {:.2e}", dec.reconstruct().max_abs_diff(sigma.as_matrix()));

    for v in [[1.0, 1.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 1.0]] {
        println!("v = {v:?}: lambda_1^2 = {:.6}", lambda1_sq(&sigma, &v)?);
    }
    let (v, best) = best_binary_v(&sigma)?;
    println!("largest lambda_1^2 over binary v: {v:?} -> {best:.6}");

    // without correlation every direction carries the same share
    let dec = rank_one_reduce(&SymMatrix::identity(4), &[1.0; 4])?;
    println!("identity, d = 4: lambda_1^2 = {}", dec.lambda1_sq());
    Ok(())
}
