// SPDX-License-Identifier: Apache-2.0

//! Human-readable PDEs, with every term moved to the right-hand side.

use pded_core::{CoefficientVector, TermKey, TermLibrary};

fn field_name(i: usize, n_eqs: usize) -> String {
    if n_eqs == 1 {
        "f".to_string()
    } else {
        format!("f{}", i + 1)
    }
}

fn axis_name(j: usize, n_dims: usize) -> String {
    match (n_dims, j) {
        (1..=3, 0) => "x".into(),
        (2..=3, 1) => "y".into(),
        (3, 2) => "z".into(),
        _ => format!("x{}", j + 1),
    }
}

/// `f`, `f^2`, `f1 f2^3`, ...
pub fn monomial_label(power: &[u32]) -> String {
    let n = power.len();
    power
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0)
        .map(|(i, &p)| {
            if p == 1 {
                field_name(i, n)
            } else {
                format!("{}^{p}", field_name(i, n))
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// `f_xx`, `(f^2)_x`, `(f1 f2)_xy`.
pub fn term_label(term: &TermKey) -> String {
    let mono = monomial_label(&term.power);
    let n = term.deriv.len();
    let suffix: String = term
        .deriv
        .iter()
        .enumerate()
        .map(|(j, &d)| axis_name(j, n).repeat(d as usize))
        .collect();
    if suffix.is_empty() {
        mono
    } else if term.power.iter().sum::<u32>() == 1 {
        format!("{mono}_{suffix}")
    } else {
        format!("({mono})_{suffix}")
    }
}

/// One line per equation, e.g. `f_t = 1.000000 f_xx`.
pub fn format_pde(library: &TermLibrary, alpha: &CoefficientVector) -> Vec<String> {
    (0..library.n_eqs())
        .map(|eq| {
            let mut line = format!("{}_t =", field_name(eq, library.n_eqs()));
            let mut first = true;
            for (t, &a) in library.terms().iter().zip(alpha.values()) {
                if t.eq != eq || a == 0.0 {
                    continue;
                }
                let c = -a;
                if first {
                    line.push_str(&format!(" {c:.6} {}", term_label(t)));
                    first = false;
                } else if c < 0.0 {
                    line.push_str(&format!(" - {:.6} {}", -c, term_label(t)));
                } else {
                    line.push_str(&format!(" + {c:.6} {}", term_label(t)));
                }
            }
            if first {
                line.push_str(" 0");
            }
            line
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use pded_core::library::build_library;

    #[test]
    fn heat_prints_like_the_table() {
        let lib = build_library(1, 1, &[vec![1], vec![2]], &[vec![1], vec![2]]).unwrap();
        let a = CoefficientVector::new(vec![0.0, 0.5, -1.0, 0.0]).unwrap();
        assert_eq!(format_pde(&lib, &a), vec!["f_t = -0.500000 (f^2)_x + 1.000000 f_xx"]);
        let z = CoefficientVector::zeros(4);
        assert_eq!(format_pde(&lib, &z), vec!["f_t = 0"]);
    }

    #[test]
    fn labels_in_two_dimensions() {
        let t = TermKey::new(1, vec![1, 1], vec![1, 2]);
        assert_eq!(term_label(&t), "(f1 f2^2)_xy");
        let t = TermKey::new(0, vec![0, 2], vec![0, 1]);
        assert_eq!(term_label(&t), "f2_yy");
    }
}
