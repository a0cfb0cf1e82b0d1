//! Per-element radii and colors.
//!
//! Covalent radii follow Cordero et al. (2008) single-bond values; van der
//! Waals radii are Bondi (1964); colors are the common CPK palette.

/// Covalent radius used for unknown elements.
pub const FALLBACK_COVALENT_RADIUS: f64 = 0.77;
/// Van der Waals radius used for unknown elements.
pub const FALLBACK_VDW_RADIUS: f64 = 1.80;

pub fn normalize_element(symbol: &str) -> String {
    let s = symbol.trim();
    let mut out = String::with_capacity(2);
    for (i, c) in s.chars().filter(|c| c.is_ascii_alphabetic()).enumerate() {
        if i == 0 {
            out.push(c.to_ascii_uppercase());
        } else {
            out.push(c.to_ascii_lowercase());
        }
    }
    out
}

/// Covalent radius in Å, `None` for elements outside the table.
pub fn covalent_radius(element: &str) -> Option<f64> {
    Some(match element {
        "H" => 0.31,
        "He" => 0.28,
        "Li" => 1.28,
        "Be" => 0.96,
        "B" => 0.84,
        "C" => 0.76,
        "N" => 0.71,
        "O" => 0.66,
        "F" => 0.57,
        "Na" => 1.66,
        "Mg" => 1.41,
        "Al" => 1.21,
        "Si" => 1.11,
        "P" => 1.07,
        "S" => 1.05,
        "Cl" => 1.02,
        "K" => 2.03,
        "Ca" => 1.76,
        "Mn" => 1.39,
        "Fe" => 1.32,
        "Co" => 1.26,
        "Ni" => 1.24,
        "Cu" => 1.32,
        "Zn" => 1.22,
        "Se" => 1.20,
        "Br" => 1.20,
        "I" => 1.39,
        _ => return None,
    })
}

/// Van der Waals radius in Å.
pub fn vdw_radius(element: &str) -> f64 {
    match element {
        "H" => 1.20,
        "C" => 1.70,
        "N" => 1.55,
        "O" => 1.52,
        "F" => 1.47,
        "P" => 1.80,
        "S" => 1.80,
        "Cl" => 1.75,
        "Br" => 1.85,
        "I" => 1.98,
        "Se" => 1.90,
        "Na" => 2.27,
        "Mg" => 1.73,
        "K" => 2.75,
        "Zn" => 1.39,
        "Cu" => 1.40,
        "Fe" => 1.94,
        _ => FALLBACK_VDW_RADIUS,
    }
}

/// CPK color, linear RGB.
pub fn cpk_color(element: &str) -> [f64; 3] {
    match element {
        "H" => [1.0, 1.0, 1.0],
        "C" => [0.565, 0.565, 0.565],
        "N" => [0.188, 0.314, 0.973],
        "O" => [1.0, 0.051, 0.051],
        "S" => [1.0, 1.0, 0.188],
        "P" => [1.0, 0.502, 0.0],
        "Fe" => [0.878, 0.4, 0.2],
        "Mg" => [0.541, 1.0, 0.0],
        "Zn" => [0.490, 0.502, 0.690],
        _ => [0.922, 0.0, 0.922],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn element_symbols_normalize() {
        assert_eq!(normalize_element(" C"), "C");
        assert_eq!(normalize_element("FE"), "Fe");
        assert_eq!(normalize_element("cl"), "Cl");
    }

    #[test]
    fn carbon_radii() {
        assert_eq!(vdw_radius("C"), 1.70);
        assert_eq!(covalent_radius("C"), Some(0.76));
        assert_eq!(covalent_radius("Xx"), None);
    }
}
