//! Per-style summaries of artist positions in the (NC, alpha) plane.

use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq)]
pub struct ArtistPoint {
    pub author: String,
    pub style: String,
    pub nc: f64,
    pub alpha: f64,
}

/// Center of mass and per-axis population standard deviation of one style.
#[derive(Clone, Debug, PartialEq)]
pub struct StyleEllipse {
    pub style: String,
    pub n_artists: usize,
    pub nc_center: f64,
    pub alpha_center: f64,
    pub nc_std: f64,
    pub alpha_std: f64,
}

pub fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// One ellipse per style, sorted by style name.
pub fn style_ellipses(points: &[ArtistPoint]) -> Vec<StyleEllipse> {
    let mut by_style: BTreeMap<&str, Vec<&ArtistPoint>> = BTreeMap::new();
    for p in points {
        by_style.entry(&p.style).or_default().push(p);
    }
    by_style
        .into_iter()
        .map(|(style, ps)| {
            let (nc_center, nc_std) = mean_std(&ps.iter().map(|p| p.nc).collect::<Vec<_>>());
            let (alpha_center, alpha_std) = mean_std(&ps.iter().map(|p| p.alpha).collect::<Vec<_>>());
            StyleEllipse {
                style: style.to_string(),
                n_artists: ps.len(),
                nc_center,
                alpha_center,
                nc_std,
                alpha_std,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(author: &str, style: &str, nc: f64, alpha: f64) -> ArtistPoint {
        ArtistPoint { author: author.into(), style: style.into(), nc, alpha }
    }

    #[test]
    fn center_of_mass() {
        let e = style_ellipses(&[p("a", "S", 0.2, 0.4), p("b", "S", 0.4, 0.6)]);
        assert_eq!(e.len(), 1);
        assert!((e[0].nc_center - 0.3).abs() < 1e-12);
        assert!((e[0].alpha_center - 0.5).abs() < 1e-12);
        assert!((e[0].nc_std - 0.1).abs() < 1e-12);
    }

    #[test]
    fn single_artist_has_zero_width() {
        let e = style_ellipses(&[p("a", "S", 0.2, 0.4), p("b", "T", 0.9, 1.0)]);
        assert_eq!(e.len(), 2);
        assert_eq!((e[1].style.as_str(), e[1].nc_std, e[1].alpha_std), ("T", 0.0, 0.0));
        assert!(style_ellipses(&[]).is_empty());
    }
}
