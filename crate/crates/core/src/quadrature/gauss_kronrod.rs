//! 21-point Gauss-Kronrod panel and a globally adaptive bisection driver.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{HsError, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

pub const PANEL_EVALS: usize = 21;

#[derive(Debug, Clone, Copy)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
    pub value: f64,
    pub error: f64,
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut e = err.abs();
    if res_asc != 0.0 && e != 0.0 {
        let scale = (200.0 * e / res_asc).powf(1.5);
        e = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        e = e.max(50.0 * f64::EPSILON * res_abs);
    }
    e
}

/// One GK21 panel on `[a, b]`. Endpoints are never sampled.
pub fn gk21<F>(f: &mut F, a: f64, b: f64) -> Result<Panel>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        if !(f1.is_finite() && f2.is_finite()) {
            return Err(HsError::divergent(
                "quadrature",
                format!("non-finite integrand near {}", center - dx),
            ));
        }
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        // odd Kronrod nodes are the Gauss nodes
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    if !fc.is_finite() {
        return Err(HsError::divergent(
            "quadrature",
            format!("non-finite integrand at {center}"),
        ));
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let h = half.abs();
    let err = rescale_error((res_k - res_g) * half, res_abs * h, res_asc * h);
    Ok(Panel {
        a,
        b,
        value: res_k * half,
        error: err,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptOpts {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_evals: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptOutcome {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

struct ByError(Panel);

impl PartialEq for ByError {
    fn eq(&self, other: &Self) -> bool {
        self.0.error == other.0.error
    }
}
impl Eq for ByError {}
impl PartialOrd for ByError {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for ByError {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.error.total_cmp(&other.0.error)
    }
}

/// Globally adaptive bisection over `[a, b]` split first at `breaks`.
///
/// The returned state is the one with the smallest total error estimate
/// among all states visited, so a larger budget never reports a larger
/// error. `converged` is false when the budget ran out or the worst panel
/// could not be bisected further.
pub fn adaptive<F>(f: &mut F, a: f64, b: f64, breaks: &[f64], opts: AdaptOpts) -> Result<AdaptOutcome>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut cuts = vec![a];
    cuts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut heap = BinaryHeap::new();
    let mut evals = 0usize;
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in cuts.windows(2) {
        let p = gk21(f, w[0], w[1])?;
        evals += PANEL_EVALS;
        total += p.value;
        total_err += p.error;
        heap.push(ByError(p));
    }

    let mut best = (total, total_err);
    loop {
        let target = opts.abs_tol.max(opts.rel_tol * total.abs());
        if total_err <= target {
            let (value, error) = if total_err <= best.1 { (total, total_err) } else { best };
            return Ok(AdaptOutcome {
                value,
                error,
                evaluations: evals,
                converged: true,
            });
        }
        if evals + 2 * PANEL_EVALS > opts.max_evals {
            break;
        }
        let Some(ByError(worst)) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        let width = worst.b - worst.a;
        if !(mid > worst.a && mid < worst.b)
            || width <= 4.0 * f64::EPSILON * worst.a.abs().max(worst.b.abs())
        {
            heap.push(ByError(worst));
            break;
        }
        let left = gk21(f, worst.a, mid)?;
        let right = gk21(f, mid, worst.b)?;
        evals += 2 * PANEL_EVALS;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(ByError(left));
        heap.push(ByError(right));
        // resum occasionally to limit drift of the running sums
        if heap.len() % 64 == 0 {
            total = heap.iter().map(|p| p.0.value).sum();
            total_err = heap.iter().map(|p| p.0.error).sum();
        }
        if total_err < best.1 {
            best = (total, total_err);
        }
    }
    Ok(AdaptOutcome {
        value: best.0,
        error: best.1,
        evaluations: evals,
        converged: false,
    })
}
