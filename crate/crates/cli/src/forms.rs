//! Parsing of the `--eta` and `--q` arguments.

use anyhow::{anyhow, bail, Context, Result};
use flatdiff::hodge::{self, OneForm};
use flatdiff::{pairing, C64, Mesh, QDElement};
use nalgebra::DMatrix;

pub fn complex(s: &str) -> Result<C64> {
    let t = s.trim().replace(' ', "");
    t.parse::<C64>().map_err(|_| anyhow!("'{s}' is not a complex number (try 1, -0.5i, 0.3-0.7i)"))
}

fn complex_list(s: &str) -> Result<Vec<C64>> {
    if s.trim().is_empty() {
        return Ok(vec![]);
    }
    s.split(',').map(complex).collect()
}

fn index(s: &str, what: &str, len: usize) -> Result<usize> {
    let i: usize = s.trim().parse().with_context(|| format!("bad {what} index '{s}'"))?;
    if i >= len {
        bail!("{what} index {i} out of range (have {len})");
    }
    Ok(i)
}

/// One-form specs:
///
/// - `harmonic-basis:i` — the i-th orthonormal harmonic form (anti-invariant ones on a cover)
/// - `conj-holomorphic:i` — the conjugate of the i-th holomorphic form
/// - `constant:a,b` — `a dz + b dz̄`
/// - `periods:p1,p2,…[;r1,r2,…]` — absolute periods on the homology basis, then relative ones
pub fn eta(spec: &str, mesh: &Mesh, bump_radius: f64) -> Result<OneForm> {
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    let on_cover = mesh.involution.is_some();
    match kind {
        "harmonic-basis" => {
            let forms = if on_cover { hodge::anti_invariant_basis(mesh)?.harmonic } else { hodge::harmonic_basis(mesh)?.forms };
            Ok(forms[index(arg, "harmonic basis", forms.len())?].clone())
        }
        "conj-holomorphic" => {
            let forms = if on_cover { hodge::anti_invariant_basis(mesh)?.antiholomorphic } else { hodge::holomorphic_basis(mesh)?.forms.iter().map(|f| f.conj()).collect() };
            Ok(forms[index(arg, "holomorphic basis", forms.len())?].clone())
        }
        "constant" => {
            let v = complex_list(arg)?;
            if v.len() != 2 {
                bail!("constant form needs two coefficients 'a,b' for a dz + b dz̄");
            }
            Ok(hodge::constant_form(mesh, v[0], v[1]))
        }
        "periods" => {
            let (abs, rel) = arg.split_once(';').unwrap_or((arg, ""));
            Ok(pairing::form_with_periods(mesh, &complex_list(abs)?, &complex_list(rel)?, bump_radius)?)
        }
        _ => bail!("unknown one-form spec '{spec}' (expected harmonic-basis:i, conj-holomorphic:i, constant:a,b or periods:…)"),
    }
}

/// Quadratic differential specs:
///
/// - `omega-squared` — `ω²`
/// - `constant:c` — `c ω²`
/// - `coeffs:c00,c01,…;c10,c11,…` — symmetric matrix over the holomorphic basis
pub fn qd(spec: &str, mesh: &Mesh) -> Result<QDElement> {
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    match kind {
        "omega-squared" => Ok(QDElement::omega_squared(mesh)),
        "constant" => Ok(QDElement::constant(mesh, complex(arg)?)),
        "coeffs" => {
            let rows: Vec<Vec<C64>> = arg.split(';').map(complex_list).collect::<Result<_>>()?;
            let n = rows.len();
            if rows.iter().any(|r| r.len() != n) {
                bail!("coefficient matrix must be square");
            }
            let forms = if mesh.involution.is_some() { hodge::anti_invariant_basis(mesh)?.holomorphic } else { hodge::holomorphic_basis(mesh)?.forms };
            if forms.len() != n {
                bail!("coefficient matrix is {n}x{n} but the holomorphic basis has {} forms", forms.len());
            }
            let refs: Vec<&OneForm> = forms.iter().collect();
            Ok(QDElement::from_forms(&refs, DMatrix::from_fn(n, n, |i, j| rows[i][j]))?)
        }
        _ => bail!("unknown quadratic differential spec '{spec}' (expected omega-squared, constant:c or coeffs:…)"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_numbers() {
        assert_eq!(complex("0.3-0.7i").unwrap(), C64::new(0.3, -0.7));
        assert_eq!(complex("i").unwrap(), C64::new(0.0, 1.0));
        assert_eq!(complex(" 2 ").unwrap(), C64::new(2.0, 0.0));
        assert!(complex("x").is_err());
        assert_eq!(complex_list("1,i").unwrap().len(), 2);
    }
}
