use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Sampling of the open interval `(0, 1)` used by every numeric certificate.
///
/// Points are `eps + k·(1 − 2·eps)/points` for `k = 0..=points`. The minimum
/// margin is then refined by `refine_levels` passes of a 10× denser local
/// grid around the current worst point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub points: usize,
    pub eps: f64,
    /// Points closer than this to the break-even level are skipped.
    pub exclusion: f64,
    pub refine_levels: u32,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            points: 4096,
            eps: 1e-6,
            exclusion: 1e-9,
            refine_levels: 3,
        }
    }
}

impl GridConfig {
    pub fn spacing(&self) -> f64 {
        (1.0 - 2.0 * self.eps) / self.points as f64
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        let h = self.spacing();
        (0..=self.points).map(move |k| self.eps + k as f64 * h)
    }

    /// `2·10 + 1` points around `center` with spacing `h`, clipped to the
    /// grid range.
    pub(crate) fn local(&self, center: f64, h: f64) -> impl Iterator<Item = f64> {
        let (lo, hi) = (self.eps, 1.0 - self.eps);
        (-10..=10)
            .map(move |j| center + f64::from(j) * h)
            .filter(move |s| *s >= lo && *s <= hi)
    }

    /// Grid points then, after each pass, a denser patch around the running
    /// minimum of `score`. `score` returns `None` for points it ignores.
    pub(crate) fn minimize(
        &self,
        mut score: impl FnMut(f64) -> Result<Option<f64>>,
    ) -> Result<Option<(f64, f64)>> {
        let mut best: Option<(f64, f64)> = None;
        let mut consider = |s: f64, best: &mut Option<(f64, f64)>| -> Result<()> {
            if let Some(v) = score(s)? {
                if best.is_none_or(|(_, b)| v < b) {
                    *best = Some((s, v));
                }
            }
            Ok(())
        };
        for s in self.iter() {
            consider(s, &mut best)?;
        }
        let mut h = self.spacing();
        for _ in 0..self.refine_levels {
            let Some((center, _)) = best else { break };
            h /= 10.0;
            for s in self.local(center, h) {
                consider(s, &mut best)?;
            }
        }
        Ok(best)
    }
}

/// Outcome of a pointwise sign condition on `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignConditionResult {
    /// Margin is positive at every checked point.
    pub holds: bool,
    pub worst_point: f64,
    pub margin: f64,
    /// Only for the `P_1` condition: `P_1' < 0` at every grid point.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub monotone_decreasing: Option<bool>,
}

/// Minimize a margin over the grid, skipping points near `lambda`.
pub(crate) fn sign_condition(
    grid: &GridConfig,
    lambda: f64,
    mut margin: impl FnMut(f64) -> Result<f64>,
) -> Result<SignConditionResult> {
    let best = grid.minimize(|s| {
        if (s - lambda).abs() < grid.exclusion {
            return Ok(None);
        }
        margin(s).map(Some)
    })?;
    let (worst_point, margin) = best.unwrap_or((f64::NAN, f64::NAN));
    Ok(SignConditionResult {
        holds: margin > 0.0,
        worst_point,
        margin,
        monotone_decreasing: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_layout() {
        let g = GridConfig::default();
        let pts: Vec<f64> = g.iter().collect();
        assert_eq!(pts.len(), 4097);
        assert_eq!(pts[0], 1e-6);
        assert!((pts[4096] - (1.0 - 1e-6)).abs() < 1e-15);
    }

    #[test]
    fn refinement_sharpens_the_minimum() {
        let g = GridConfig {
            points: 16,
            ..GridConfig::default()
        };
        let target = 0.123_456;
        let (s, v) = g
            .minimize(|s| Ok(Some((s - target).abs())))
            .unwrap()
            .unwrap();
        // coarse spacing is ~0.06; three 10× passes bring it near 6e-5
        assert!((s - target).abs() < 1e-4, "{s}");
        assert!(v < 1e-4);
    }

    #[test]
    fn excluded_points_are_skipped() {
        let g = GridConfig::default();
        let r = sign_condition(&g, 0.5, |s| Ok((s - 0.5).abs() - 1e-12)).unwrap();
        assert!(r.holds);
    }
}
