use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::linalg::{outer, CMatrix, CVector, C64};
use crate::model::geometry::{distance, pathloss_gain, NetworkGeometry, Point};
use crate::model::params::{AntennaVariance, SystemParams};

/// One quasi-static fading draw for every link, in geometry order.
///
/// WD-to-WD links are drawn for every pair so the same draw can be viewed
/// with any cluster head.
#[derive(Debug, Clone)]
pub struct FadingDraw {
    pub a: Vec<CVector>,
    pub b: CVector,
    pub l_th: C64,
    pub l_ir: Vec<C64>,
    pub l_id: Vec<C64>,
    /// Symmetric WD–WD coefficients; the diagonal is zero.
    pub pair: Vec<Vec<C64>>,
}

/// Channel state seen by one cluster: WD index 0 is the cluster head and
/// indices `1..N` are the members, in increasing geometry order.
///
/// `c[j]` is the member-to-head coefficient for `j ≥ 1`; `c[0]` is unused
/// and always zero. All gains are squared magnitudes of the coefficients.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// Geometry index of each relabeled WD.
    pub order: Vec<usize>,
    pub a: Vec<CVector>,
    pub c: Vec<C64>,
    pub b: CVector,
    pub l_th: C64,
    pub l_ir: Vec<C64>,
    pub l_id: Vec<C64>,
    pub h: Vec<f64>,
    pub g: Vec<f64>,
    pub h_th: f64,
    pub h_ir: Vec<f64>,
    pub h_id: Vec<f64>,
    pub h_hr: CMatrix,
}

impl ChannelRealization {
    /// Build from coefficients already in cluster order (head first).
    pub fn from_coefficients(
        a: Vec<CVector>,
        c: Vec<C64>,
        b: CVector,
        l_th: C64,
        l_ir: Vec<C64>,
        l_id: Vec<C64>,
    ) -> Self {
        let n = a.len();
        assert!(n >= 1, "at least one WD");
        assert!(c.len() == n && l_ir.len() == n && l_id.len() == n, "per-WD lengths differ");
        assert!(a.iter().all(|v| v.len() == b.len()), "antenna counts differ");
        let mut c = c;
        c[0] = C64::new(0.0, 0.0);
        Self {
            order: (0..n).collect(),
            h: a.iter().map(|v| v.norm_squared()).collect(),
            g: c.iter().map(|x| x.norm_sqr()).collect(),
            h_th: l_th.norm_sqr(),
            h_ir: l_ir.iter().map(|x| x.norm_sqr()).collect(),
            h_id: l_id.iter().map(|x| x.norm_sqr()).collect(),
            h_hr: outer(&b),
            a,
            c,
            b,
            l_th,
            l_ir,
            l_id,
        }
    }

    /// Single-antenna instance from real, non-negative power gains.
    /// Slices are in cluster order; `g[0]` is ignored.
    pub fn from_gains(h: &[f64], g: &[f64], h_hr: f64, h_th: f64, h_ir: &[f64], h_id: &[f64]) -> Self {
        let re = |x: f64| C64::new(x.sqrt(), 0.0);
        Self::from_coefficients(
            h.iter().map(|&x| CVector::from_element(1, re(x))).collect(),
            g.iter().map(|&x| re(x)).collect(),
            CVector::from_element(1, re(h_hr)),
            re(h_th),
            h_ir.iter().map(|&x| re(x)).collect(),
            h_id.iter().map(|&x| re(x)).collect(),
        )
    }

    pub fn num_wds(&self) -> usize {
        self.a.len()
    }

    pub fn antennas(&self) -> usize {
        self.b.len()
    }

    pub fn with_order(mut self, order: Vec<usize>) -> Self {
        self.order = order;
        self
    }
}

/// Mean gains of every link, in geometry order.
#[derive(Debug, Clone)]
pub struct LinkGains {
    pub hap_wd: Vec<f64>,
    pub hap_pr: f64,
    pub pt_hap: f64,
    pub wd_pr: Vec<f64>,
    pub pt_wd: Vec<f64>,
    pub wd_wd: Vec<Vec<f64>>,
}

pub fn link_gains(geometry: &NetworkGeometry, params: &SystemParams) -> Result<LinkGains> {
    let gain = |p: Point, q: Point| {
        pathloss_gain(distance(p, q), params.carrier_freq, params.antenna_gain, params.pathloss_exp)
    };
    let n = geometry.num_wds();
    let wds = &geometry.wd_pos;
    let mut wd_wd = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = gain(wds[i], wds[j])?;
            wd_wd[i][j] = v;
            wd_wd[j][i] = v;
        }
    }
    Ok(LinkGains {
        hap_wd: wds.iter().map(|&p| gain(geometry.hap_pos, p)).collect::<Result<_>>()?,
        hap_pr: gain(geometry.hap_pos, geometry.pr_pos)?,
        pt_hap: gain(geometry.pt_pos, geometry.hap_pos)?,
        wd_pr: wds.iter().map(|&p| gain(p, geometry.pr_pos)).collect::<Result<_>>()?,
        pt_wd: wds.iter().map(|&p| gain(geometry.pt_pos, p)).collect::<Result<_>>()?,
        wd_wd,
    })
}

/// Circularly-symmetric complex Gaussian with `E|x|² = variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

/// Draw every link once. Reciprocal links share a single coefficient.
pub fn sample_draw<R: Rng + ?Sized>(gains: &LinkGains, params: &SystemParams, rng: &mut R) -> FadingDraw {
    let m = params.antennas;
    let per_entry = match params.antenna_variance {
        AntennaVariance::PerEntry => 1.0,
        AntennaVariance::TotalPower => 1.0 / m as f64,
    };
    let vector = |rng: &mut R, var: f64| {
        CVector::from_iterator(m, (0..m).map(|_| complex_gaussian(rng, var * per_entry)))
    };
    let a: Vec<CVector> = gains.hap_wd.iter().map(|&v| vector(rng, v)).collect();
    let b = vector(rng, gains.hap_pr);
    let l_th = complex_gaussian(rng, gains.pt_hap);
    let l_ir = gains.wd_pr.iter().map(|&v| complex_gaussian(rng, v)).collect();
    let l_id = gains.pt_wd.iter().map(|&v| complex_gaussian(rng, v)).collect();
    let n = gains.hap_wd.len();
    let mut pair = vec![vec![C64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let c = complex_gaussian(rng, gains.wd_wd[i][j]);
            pair[i][j] = c;
            pair[j][i] = c;
        }
    }
    FadingDraw { a, b, l_th, l_ir, l_id, pair }
}

impl FadingDraw {
    /// View of this draw with WD `ch` (geometry index) as cluster head.
    pub fn realization(&self, ch: usize) -> ChannelRealization {
        let n = self.a.len();
        assert!(ch < n, "cluster head index out of range");
        let order: Vec<usize> = std::iter::once(ch).chain((0..n).filter(|&i| i != ch)).collect();
        ChannelRealization::from_coefficients(
            order.iter().map(|&i| self.a[i].clone()).collect(),
            order.iter().map(|&i| self.pair[i][ch]).collect(),
            self.b.clone(),
            self.l_th,
            order.iter().map(|&i| self.l_ir[i]).collect(),
            order.iter().map(|&i| self.l_id[i]).collect(),
        )
        .with_order(order)
    }
}

/// Sample a realization relabeled around the geometry's cluster head.
pub fn sample_channels<R: Rng + ?Sized>(
    geometry: &NetworkGeometry,
    params: &SystemParams,
    rng: &mut R,
) -> Result<ChannelRealization> {
    let gains = link_gains(geometry, params)?;
    Ok(sample_draw(&gains, params, rng).realization(geometry.ch_index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::geometry::{build_geometry, ScenarioCase};
    use crate::model::seeded_rng;

    #[test]
    fn zero_variance_gives_zero_coefficient() {
        let mut rng = seeded_rng(3, 1);
        for _ in 0..10 {
            assert_eq!(complex_gaussian(&mut rng, 0.0), C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn same_seed_same_realization() {
        let params = SystemParams::default();
        let geo = build_geometry(ScenarioCase::Case1, 5, 15, 3.0, 6.0).unwrap();
        let r1 = sample_channels(&geo, &params, &mut seeded_rng(9, 1)).unwrap();
        let r2 = sample_channels(&geo, &params, &mut seeded_rng(9, 1)).unwrap();
        assert_eq!(r1.a, r2.a);
        assert_eq!(r1.c, r2.c);
        assert_eq!(r1.l_id, r2.l_id);
        assert_eq!(r1.h_hr, r2.h_hr);
    }

    #[test]
    fn relabeling_puts_head_first() {
        let params = SystemParams::default().with_num_wds(4);
        let geo = build_geometry(ScenarioCase::Case1, 11, 4, 3.0, 6.0).unwrap();
        let gains = link_gains(&geo, &params).unwrap();
        let draw = sample_draw(&gains, &params, &mut seeded_rng(1, 1));
        let r = draw.realization(2);
        assert_eq!(r.order, vec![2, 0, 1, 3]);
        assert_eq!(r.a[0], draw.a[2]);
        assert_eq!(r.c[1], draw.pair[0][2]);
        assert_eq!(r.c[0], C64::new(0.0, 0.0));
        assert_eq!(r.g[0], 0.0);
    }

    #[test]
    fn derived_gains_match_coefficients() {
        let params = SystemParams::default();
        let geo = build_geometry(ScenarioCase::Case2, 2, 15, 3.0, 6.0).unwrap();
        let r = sample_channels(&geo, &params, &mut seeded_rng(4, 1)).unwrap();
        for (a, h) in r.a.iter().zip(&r.h) {
            let sum: f64 = a.iter().map(|x| x.norm_sqr()).sum();
            assert!((sum - h).abs() <= 1e-15 * h);
        }
        let bbh = &r.b * r.b.adjoint();
        assert_eq!(bbh, r.h_hr);
        let tr: f64 = r.h_hr.diagonal().iter().map(|x| x.re).sum();
        assert!((tr - r.b.norm_squared()).abs() <= 1e-12 * tr);
    }
}
