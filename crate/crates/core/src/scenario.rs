//! Factory geometry, path loss and AP selection.

use nalgebra::DMatrix;
use rand::Rng;

use crate::config::{SystemConfig, AREA_SIDE_M};
use crate::error::{Error, Result};
use crate::rng::{domain, substream};

/// Three-slope breakpoints in meters.
pub const D0_M: f64 = 10.0;
pub const D1_M: f64 = 50.0;
/// AP-device distances are clamped to at least this many meters.
pub const MIN_DISTANCE_M: f64 = 1.0;

pub const BOLTZMANN: f64 = 1.381e-23;
pub const NOISE_TEMPERATURE_K: f64 = 290.0;

/// Large-scale description of one deployment.
///
/// `beta[(m, k)]` is the noise-normalized linear gain between AP `m` and
/// device `k`, so every SINR downstream uses unit noise power.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeScaleModel {
    pub beta: DMatrix<f64>,
    /// Serving APs of each device, sorted by descending gain.
    pub service_sets: Vec<Vec<usize>>,
    pub antennas: usize,
    pub positions_ap: Vec<[f64; 2]>,
    pub positions_dev: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl LargeScaleModel {
    /// Builds a model directly from a gain matrix (M x K), selecting serving
    /// APs with `threshold`. Positions are left empty and weights set to one.
    pub fn from_beta(beta: DMatrix<f64>, antennas: usize, threshold: f64) -> Result<Self> {
        if beta.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return Err(Error::domain("large-scale gains must be positive and finite"));
        }
        let k = beta.ncols();
        let service_sets = (0..k)
            .map(|j| select_aps(beta.column(j).as_slice(), threshold))
            .collect::<Result<Vec<_>>>()?;
        Ok(LargeScaleModel {
            beta,
            service_sets,
            antennas,
            positions_ap: Vec::new(),
            positions_dev: Vec::new(),
            weights: vec![1.0; k],
        })
    }

    pub fn num_aps(&self) -> usize {
        self.beta.nrows()
    }

    pub fn num_devices(&self) -> usize {
        self.beta.ncols()
    }

    /// Same deployment with service sets recomputed for another threshold.
    pub fn with_threshold(&self, threshold: f64) -> Result<Self> {
        let mut out = self.clone();
        out.service_sets = (0..self.num_devices())
            .map(|j| select_aps(self.beta.column(j).as_slice(), threshold))
            .collect::<Result<Vec<_>>>()?;
        Ok(out)
    }

    /// Same deployment served by every AP.
    pub fn with_all_aps(&self) -> Self {
        let mut out = self.clone();
        let m = self.num_aps();
        out.service_sets = (0..self.num_devices())
            .map(|j| {
                let mut idx: Vec<usize> = (0..m).collect();
                idx.sort_by(|&a, &b| self.beta[(b, j)].total_cmp(&self.beta[(a, j)]).then(a.cmp(&b)));
                idx
            })
            .collect();
        out
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Self {
        assert_eq!(weights.len(), self.num_devices());
        self.weights = weights;
        self
    }
}

/// Hata-style constant term of the three-slope model, in dB.
pub fn loss_constant_db(cfg: &SystemConfig) -> f64 {
    let lf = cfg.carrier_freq_mhz.log10();
    46.3 + 33.9 * lf - 13.82 * cfg.ap_height_m.log10() - (1.1 * lf - 0.7) * cfg.device_height_m
        + (1.56 * lf - 0.8)
}

/// Three-slope path loss in dB for a distance in meters.
///
/// The slopes act on the distance expressed in kilometers, as in the
/// cell-free literature the model comes from.
pub fn path_loss_db(distance_m: f64, cfg: &SystemConfig) -> Result<f64> {
    if !(distance_m > 0.0) || !distance_m.is_finite() {
        return Err(Error::domain(format!("distance must be positive, got {distance_m}")));
    }
    let l = loss_constant_db(cfg);
    let km = |d: f64| d / 1000.0;
    let pl = if distance_m > D1_M {
        l + 35.0 * km(distance_m).log10()
    } else if distance_m <= D0_M {
        l + 15.0 * km(D1_M).log10() + 20.0 * km(D0_M).log10()
    } else {
        l + 15.0 * km(D1_M).log10() + 20.0 * km(distance_m).log10()
    };
    Ok(pl)
}

/// Thermal noise power `B k_B T_0 10^(NF/10)` in watts.
pub fn noise_power_w(cfg: &SystemConfig) -> f64 {
    cfg.bandwidth_hz * BOLTZMANN * NOISE_TEMPERATURE_K * 10f64.powf(cfg.noise_figure_db / 10.0)
}

/// AP coordinates: a uniform `sqrt(M) x sqrt(M)` grid with half-spacing
/// margins. `M = 1` puts the single AP at the center.
pub fn ap_grid(num_aps: usize) -> Result<Vec<[f64; 2]>> {
    let side = (num_aps as f64).sqrt().round() as usize;
    if side == 0 || side * side != num_aps {
        return Err(Error::config(format!("number of APs {num_aps} is not a perfect square")));
    }
    let spacing = AREA_SIDE_M / side as f64;
    let mut out = Vec::with_capacity(num_aps);
    for row in 0..side {
        for col in 0..side {
            out.push([spacing * (col as f64 + 0.5), spacing * (row as f64 + 0.5)]);
        }
    }
    Ok(out)
}

/// Draws a deployment: AP grid, uniform devices, gains, service sets and
/// weights.
pub fn generate_topology(cfg: &SystemConfig, seed: u64) -> Result<LargeScaleModel> {
    let positions_ap = ap_grid(cfg.num_aps)?;
    let k = cfg.num_devices;
    let mut rng = substream(seed, domain::TOPOLOGY, 0);
    let positions_dev: Vec<[f64; 2]> = (0..k)
        .map(|_| [rng.random::<f64>() * AREA_SIDE_M, rng.random::<f64>() * AREA_SIDE_M])
        .collect();
    let pn = noise_power_w(cfg);
    let mut beta = DMatrix::zeros(cfg.num_aps, k);
    for (m, ap) in positions_ap.iter().enumerate() {
        for (j, dev) in positions_dev.iter().enumerate() {
            let d = ((ap[0] - dev[0]).powi(2) + (ap[1] - dev[1]).powi(2)).sqrt().max(MIN_DISTANCE_M);
            let pl = path_loss_db(d, cfg)?;
            beta[(m, j)] = 10f64.powf(-pl / 10.0) / pn;
        }
    }
    let weights = match &cfg.weights {
        Some(w) => w.to_vec(k),
        None => {
            let mut wr = substream(seed, domain::WEIGHTS, 0);
            (0..k).map(|_| wr.random::<f64>()).collect()
        }
    };
    let mut model = LargeScaleModel::from_beta(beta, cfg.antennas_per_ap, cfg.ap_select_threshold)?;
    model.positions_ap = positions_ap;
    model.positions_dev = positions_dev;
    model.weights = weights;
    Ok(model)
}

/// Smallest set of strongest APs whose gain share reaches `threshold`.
pub fn select_aps(beta_col: &[f64], threshold: f64) -> Result<Vec<usize>> {
    if beta_col.is_empty() {
        return Err(Error::domain("empty gain column"));
    }
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::domain(format!("threshold {threshold} outside (0, 1]")));
    }
    let mut idx: Vec<usize> = (0..beta_col.len()).collect();
    idx.sort_by(|&a, &b| beta_col[b].total_cmp(&beta_col[a]).then(a.cmp(&b)));
    let total: f64 = idx.iter().map(|&i| beta_col[i]).sum();
    let mut acc = 0.0;
    for (n, &i) in idx.iter().enumerate() {
        acc += beta_col[i];
        if acc >= threshold * total {
            idx.truncate(n + 1);
            return Ok(idx);
        }
    }
    Ok(idx)
}
