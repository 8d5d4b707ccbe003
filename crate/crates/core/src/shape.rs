//! Parametric finite-perimeter sets centred at the origin, with analytic
//! volume, relative perimeter, boundary contact and signed distance.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{invalid, Result};
use crate::grid::{ball_volume, sphere_area, BallDomain};

const CONTACT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum SharpShape {
    /// Ball of radius `r`.
    Ball { r: f64 },
    /// Spherical shell `r_in < |x| < r_out`.
    Annulus { r_in: f64, r_out: f64 },
    /// Axis-aligned ellipse with semi-axes `a` (x) and `b` (y); 2-D only.
    Ellipse { a: f64, b: f64 },
    /// Axis-aligned rectangle with side lengths `a` (x) and `b` (y); 2-D only.
    Rectangle { a: f64, b: f64 },
    /// Disjoint union of the members.
    Union(Vec<SharpShape>),
}

impl fmt::Display for SharpShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SharpShape::Ball { r } => write!(f, "ball:{r}"),
            SharpShape::Annulus { r_in, r_out } => write!(f, "annulus:{r_in},{r_out}"),
            SharpShape::Ellipse { a, b } => write!(f, "ellipse:{a},{b}"),
            SharpShape::Rectangle { a, b } => write!(f, "rectangle:{a},{b}"),
            SharpShape::Union(parts) => {
                for (k, p) in parts.iter().enumerate() {
                    if k > 0 {
                        f.write_str("+")?;
                    }
                    write!(f, "{p}")?;
                }
                Ok(())
            }
        }
    }
}

impl SharpShape {
    /// Parses `ball:r`, `annulus:rin,rout`, `ellipse:a,b`, `rectangle:a,b`
    /// and `+`-joined unions of those.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split('+').map(str::trim).collect();
        if parts.len() > 1 {
            return parts
                .iter()
                .map(|p| Self::parse(p))
                .collect::<Result<Vec<_>>>()
                .map(SharpShape::Union);
        }
        let (kind, args) = text
            .split_once(':')
            .ok_or_else(|| invalid("shape", format!("`{text}` is not of the form kind:args")))?;
        let nums: Vec<f64> = args
            .split(',')
            .map(|a| a.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| invalid("shape", format!("bad numbers in `{text}`")))?;
        let need = |k: usize| -> Result<()> {
            if nums.len() == k {
                Ok(())
            } else {
                Err(invalid("shape", format!("`{kind}` takes {k} arguments")))
            }
        };
        match kind.trim() {
            "ball" | "disk" => {
                need(1)?;
                Ok(SharpShape::Ball { r: nums[0] })
            }
            "annulus" => {
                need(2)?;
                Ok(SharpShape::Annulus {
                    r_in: nums[0],
                    r_out: nums[1],
                })
            }
            "ellipse" => {
                need(2)?;
                Ok(SharpShape::Ellipse { a: nums[0], b: nums[1] })
            }
            "square" => {
                need(1)?;
                Ok(SharpShape::Rectangle { a: nums[0], b: nums[0] })
            }
            "rectangle" => {
                need(2)?;
                Ok(SharpShape::Rectangle { a: nums[0], b: nums[1] })
            }
            other => Err(invalid("shape", format!("unknown shape kind `{other}`"))),
        }
    }

    fn members(&self) -> Vec<&SharpShape> {
        match self {
            SharpShape::Union(parts) => parts.iter().flat_map(|p| p.members()).collect(),
            single => vec![single],
        }
    }

    /// Inner and outer radius of the region swept by the member.
    fn radial_extent(&self) -> (f64, f64) {
        match *self {
            SharpShape::Ball { r } => (0.0, r),
            SharpShape::Annulus { r_in, r_out } => (r_in, r_out),
            SharpShape::Ellipse { a, b } => (0.0, a.max(b)),
            SharpShape::Rectangle { a, b } => (0.0, 0.5 * a.hypot(b)),
            SharpShape::Union(_) => unreachable!("members are flattened"),
        }
    }

    /// True when the set only depends on `|x|`.
    pub fn is_radial(&self) -> bool {
        self.members()
            .iter()
            .all(|m| matches!(m, SharpShape::Ball { .. } | SharpShape::Annulus { .. }))
    }

    /// Checks parameters, containment in the closed domain, disjointness of
    /// union members and `0 < |E| < |Omega|`.
    pub fn validate(&self, domain: &BallDomain) -> Result<()> {
        let members = self.members();
        if members.is_empty() {
            return Err(invalid("shape", "empty union"));
        }
        for m in &members {
            let ok = match **m {
                SharpShape::Ball { r } => r > 0.0,
                SharpShape::Annulus { r_in, r_out } => r_in > 0.0 && r_out > r_in,
                SharpShape::Ellipse { a, b } | SharpShape::Rectangle { a, b } => {
                    if domain.dim() != 2 {
                        return Err(invalid("shape", format!("{m} is only defined in 2-D")));
                    }
                    a > 0.0 && b > 0.0
                }
                SharpShape::Union(_) => unreachable!(),
            };
            if !ok {
                return Err(invalid("shape", format!("non-positive or unordered size in {m}")));
            }
        }
        if self.clearance(domain) < -CONTACT_TOL {
            return Err(invalid("shape", format!("{self} is not contained in the domain")));
        }
        let mut extents: Vec<(f64, f64)> = members.iter().map(|m| m.radial_extent()).collect();
        extents.sort_by(|x, y| x.0.total_cmp(&y.0));
        if extents.windows(2).any(|w| w[0].1 >= w[1].0) {
            return Err(invalid("shape", format!("members of {self} are not disjoint")));
        }
        let vol = self.volume(domain.dim());
        if !(vol > 0.0 && vol < domain.volume()) {
            return Err(invalid(
                "shape",
                format!("volume {vol} outside (0, {})", domain.volume()),
            ));
        }
        Ok(())
    }

    /// `R` minus the largest distance from the origin reached by the set.
    pub fn clearance(&self, domain: &BallDomain) -> f64 {
        let outer = self
            .members()
            .iter()
            .map(|m| m.radial_extent().1)
            .fold(0.0, f64::max);
        domain.radius() - outer
    }

    pub fn volume(&self, dim: usize) -> f64 {
        self.members()
            .iter()
            .map(|m| match **m {
                SharpShape::Ball { r } => ball_volume(dim, r),
                SharpShape::Annulus { r_in, r_out } => {
                    ball_volume(dim, r_out) - ball_volume(dim, r_in)
                }
                SharpShape::Ellipse { a, b } => PI * a * b,
                SharpShape::Rectangle { a, b } => a * b,
                SharpShape::Union(_) => unreachable!(),
            })
            .sum()
    }

    fn touches(r: f64, domain: &BallDomain) -> bool {
        (r - domain.radius()).abs() <= CONTACT_TOL * domain.radius()
    }

    /// Perimeter of the set relative to the open domain: boundary pieces
    /// lying on the domain boundary are excluded.
    pub fn relative_perimeter(&self, domain: &BallDomain) -> f64 {
        let dim = domain.dim();
        self.members()
            .iter()
            .map(|m| match **m {
                SharpShape::Ball { r } if Self::touches(r, domain) => 0.0,
                SharpShape::Ball { r } => sphere_area(dim, r),
                SharpShape::Annulus { r_in, r_out } => {
                    let outer = if Self::touches(r_out, domain) {
                        0.0
                    } else {
                        sphere_area(dim, r_out)
                    };
                    sphere_area(dim, r_in) + outer
                }
                SharpShape::Ellipse { a, b } => ellipse_perimeter(a, b),
                SharpShape::Rectangle { a, b } => 2.0 * (a + b),
                SharpShape::Union(_) => unreachable!(),
            })
            .sum()
    }

    /// Surface measure of the part of the domain boundary touched by the
    /// closure of the set. Point contacts count zero.
    pub fn boundary_contact(&self, domain: &BallDomain) -> f64 {
        self.members()
            .iter()
            .map(|m| match **m {
                SharpShape::Ball { r } | SharpShape::Annulus { r_out: r, .. }
                    if Self::touches(r, domain) =>
                {
                    domain.boundary_measure()
                }
                _ => 0.0,
            })
            .sum()
    }

    /// Signed distance to the boundary of the set, positive inside. For 3-D
    /// radial shapes pass any point with the right norm.
    pub fn signed_distance(&self, p: [f64; 2]) -> f64 {
        self.members()
            .iter()
            .map(|m| match **m {
                SharpShape::Ball { r } => r - p[0].hypot(p[1]),
                SharpShape::Annulus { r_in, r_out } => {
                    let rho = p[0].hypot(p[1]);
                    (rho - r_in).min(r_out - rho)
                }
                SharpShape::Ellipse { a, b } => ellipse_signed_distance(a, b, p),
                SharpShape::Rectangle { a, b } => {
                    let qx = p[0].abs() - 0.5 * a;
                    let qy = p[1].abs() - 0.5 * b;
                    let outside = qx.max(0.0).hypot(qy.max(0.0));
                    let inside = qx.max(qy).min(0.0);
                    -(outside + inside)
                }
                SharpShape::Union(_) => unreachable!(),
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.signed_distance(p) > 0.0
    }
}

/// Perimeter of an ellipse via the arithmetic-geometric mean.
pub fn ellipse_perimeter(a: f64, b: f64) -> f64 {
    let (mut an, mut bn) = (a.max(b), a.min(b));
    let a2 = an * an;
    let mut sum = 0.5 * (a2 - bn * bn);
    let mut pow = 1.0;
    for _ in 0..64 {
        if an - bn <= 1e-16 * an {
            break;
        }
        let cn = 0.5 * (an - bn);
        sum += pow * cn * cn;
        pow *= 2.0;
        (an, bn) = (0.5 * (an + bn), (an * bn).sqrt());
    }
    2.0 * PI / an * (a2 - sum)
}

/// Signed distance to the ellipse `x^2/a^2 + y^2/b^2 = 1`, positive inside,
/// by bisection on the orthogonality condition (Eberly's method).
fn ellipse_signed_distance(a: f64, b: f64, p: [f64; 2]) -> f64 {
    let (x, y) = (p[0].abs(), p[1].abs());
    let dist = if a >= b {
        distance_first_quadrant(a, b, x, y)
    } else {
        distance_first_quadrant(b, a, y, x)
    };
    if (x / a).powi(2) + (y / b).powi(2) < 1.0 {
        dist
    } else {
        -dist
    }
}

fn distance_first_quadrant(e0: f64, e1: f64, y0: f64, y1: f64) -> f64 {
    if y1 > 0.0 {
        if y0 > 0.0 {
            let z0 = y0 / e0;
            let z1 = y1 / e1;
            let g = z0 * z0 + z1 * z1 - 1.0;
            if g == 0.0 {
                return 0.0;
            }
            let r0 = (e0 / e1) * (e0 / e1);
            let s = ellipse_root(r0, z0, z1, g);
            let x0 = r0 * y0 / (s + r0);
            let x1 = y1 / (s + 1.0);
            (x0 - y0).hypot(x1 - y1)
        } else {
            (y1 - e1).abs()
        }
    } else {
        let numer = e0 * y0;
        let denom = e0 * e0 - e1 * e1;
        if numer < denom {
            let xde = numer / denom;
            let x0 = e0 * xde;
            let x1 = e1 * (1.0 - xde * xde).max(0.0).sqrt();
            (x0 - y0).hypot(x1)
        } else {
            (y0 - e0).abs()
        }
    }
}

fn ellipse_root(r0: f64, z0: f64, z1: f64, g: f64) -> f64 {
    let n0 = r0 * z0;
    let mut s0 = z1 - 1.0;
    let mut s1 = if g < 0.0 { 0.0 } else { n0.hypot(z1) - 1.0 };
    let mut s = s0;
    for _ in 0..200 {
        s = 0.5 * (s0 + s1);
        if s == s0 || s == s1 {
            break;
        }
        let ratio0 = n0 / (s + r0);
        let ratio1 = z1 / (s + 1.0);
        let gs = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
        if gs > 0.0 {
            s0 = s;
        } else if gs < 0.0 {
            s1 = s;
        } else {
            break;
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b1() -> BallDomain {
        BallDomain::new(2, 1.0).unwrap()
    }

    #[test]
    fn ball_geometry() {
        let s = SharpShape::Ball { r: 0.5 };
        s.validate(&b1()).unwrap();
        assert!((s.volume(2) - PI / 4.0).abs() < 1e-15);
        assert!((s.relative_perimeter(&b1()) - PI).abs() < 1e-15);
        assert_eq!(s.boundary_contact(&b1()), 0.0);
        assert!((s.signed_distance([0.3, 0.0]) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn annulus_touching_boundary() {
        let s = SharpShape::Annulus { r_in: 0.5, r_out: 1.0 };
        s.validate(&b1()).unwrap();
        assert!((s.boundary_contact(&b1()) - 2.0 * PI).abs() < 1e-14);
        assert!((s.relative_perimeter(&b1()) - PI).abs() < 1e-14);
        let inner = SharpShape::Annulus { r_in: 0.5, r_out: 0.9 };
        assert_eq!(inner.boundary_contact(&b1()), 0.0);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(SharpShape::Ball { r: 1.5 }.validate(&b1()).is_err());
        assert!(SharpShape::Ball { r: 1.0 }.validate(&b1()).is_err());
        let overlapping = SharpShape::Union(vec![
            SharpShape::Ball { r: 0.3 },
            SharpShape::Annulus { r_in: 0.2, r_out: 0.5 },
        ]);
        assert!(overlapping.validate(&b1()).is_err());
        let d3 = BallDomain::new(3, 1.0).unwrap();
        assert!(SharpShape::Ellipse { a: 0.5, b: 0.2 }.validate(&d3).is_err());
    }

    #[test]
    fn ellipse_perimeter_limits() {
        assert!((ellipse_perimeter(1.0, 1.0) - 2.0 * PI).abs() < 1e-14);
        // degenerate ellipse: perimeter -> 4a
        assert!((ellipse_perimeter(1.0, 1e-9) - 4.0).abs() < 1e-6);
        // reference value for a = 2, b = 1: 9.688448220547675...
        assert!((ellipse_perimeter(2.0, 1.0) - 9.688_448_220_547_675).abs() < 1e-12);
    }

    #[test]
    fn ellipse_distance_against_sampling() {
        let (a, b) = (2f64.sqrt(), 1.0 / 2f64.sqrt());
        let boundary: Vec<[f64; 2]> = (0..200_000)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / 200_000.0;
                [a * t.cos(), b * t.sin()]
            })
            .collect();
        for p in [[0.3, 0.2], [1.2, -0.1], [-1.6, 0.5], [0.0, 0.0], [0.5, 0.9]] {
            let brute = boundary
                .iter()
                .map(|q| (q[0] - p[0]).hypot(q[1] - p[1]))
                .fold(f64::INFINITY, f64::min);
            let sd = ellipse_signed_distance(a, b, p);
            assert!((sd.abs() - brute).abs() < 1e-6, "{p:?}: {sd} vs {brute}");
        }
    }

    #[test]
    fn rectangle_distance() {
        let s = SharpShape::Rectangle { a: 2.0, b: 1.0 };
        assert!((s.signed_distance([0.0, 0.0]) - 0.5).abs() < 1e-15);
        assert!((s.signed_distance([2.0, 0.0]) + 1.0).abs() < 1e-15);
        assert!((s.signed_distance([2.0, 1.5]) + 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn parse_round_trip() {
        for text in ["ball:0.5", "annulus:0.5,1.2", "ellipse:1.4,0.7", "rectangle:1,2", "ball:0.2+annulus:0.4,0.6"] {
            let s = SharpShape::parse(text).unwrap();
            assert_eq!(SharpShape::parse(&s.to_string()).unwrap(), s);
        }
        assert_eq!(
            SharpShape::parse("square:1.5").unwrap(),
            SharpShape::Rectangle { a: 1.5, b: 1.5 }
        );
        assert!(SharpShape::parse("blob:1").is_err());
    }
}
