//! Resumable parameter sweeps. Each cell's result is stored in its own JSON
//! file; a rerun only computes missing cells and rebuilds the matrix from the
//! cell files.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ScenarioConfig, SweepConfig};
use super::output::{num, OutputDir};
use crate::dynamics::DichotomyReport;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub ix: usize,
    pub iy: usize,
    pub x: f64,
    pub y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<DichotomyReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn cell_name(ix: usize, iy: usize) -> String {
    format!("cell_{ix:03}_{iy:03}.json")
}

/// Classifies one cell. Failures are recorded in the cell, not propagated.
pub fn run_cell(cfg: &ScenarioConfig, sweep: &SweepConfig, ix: usize, iy: usize, threshold: f64) -> CellResult {
    let (x, y) = (sweep.x.values()[ix], sweep.y.values()[iy]);
    let mut cell = CellResult {
        ix,
        iy,
        x,
        y,
        report: None,
        error: None,
    };
    let outcome = (|| -> Result<DichotomyReport> {
        let mut cfg = cfg.clone();
        sweep.x.param.apply(&mut cfg.params, x);
        sweep.y.param.apply(&mut cfg.params, y);
        cfg.validate()?;
        let sc = cfg.scenario()?;
        Ok(sc.run_and_classify(threshold)?.1)
    })();
    match outcome {
        Ok(r) => cell.report = Some(r),
        Err(e) => cell.error = Some(format!("{}: {e}", e.kind())),
    }
    cell
}

/// Runs the missing cells and writes `sweep.csv`. Returns the number of
/// cells computed in this call.
pub fn run_sweep(cfg: &ScenarioConfig, out: &OutputDir) -> Result<usize> {
    let sweep = cfg.sweep.ok_or_else(|| Error::Config("scenario has no [sweep] section".into()))?;
    sweep.validate()?;
    let cells_dir = out.path("cells");
    std::fs::create_dir_all(&cells_dir)?;
    // The threshold only depends on the coefficients, diffusivities and
    // boundary operators, none of which are swept.
    let threshold = cfg.scenario()?.threshold()?.s_star;
    let todo: Vec<(usize, usize)> = (0..sweep.y.n)
        .flat_map(|iy| (0..sweep.x.n).map(move |ix| (ix, iy)))
        .filter(|&(ix, iy)| load_cell(&cells_dir.join(cell_name(ix, iy))).is_none())
        .collect();
    todo.par_iter().try_for_each(|&(ix, iy)| -> Result<()> {
        let cell = run_cell(cfg, &sweep, ix, iy, threshold);
        let text = serde_json::to_string_pretty(&cell)?;
        // Write then rename so an interrupted run never leaves a partial cell.
        let path = cells_dir.join(cell_name(ix, iy));
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, text + "\n")?;
        std::fs::rename(&tmp, &path)?;
        Ok(())
    })?;
    let mut rows = Vec::new();
    for iy in 0..sweep.y.n {
        for ix in 0..sweep.x.n {
            let cell = load_cell(&cells_dir.join(cell_name(ix, iy)))
                .ok_or_else(|| Error::Config(format!("cell {ix},{iy} missing after the sweep")))?;
            let (verdict, s_end, sup_u) = match &cell.report {
                Some(r) => (r.verdict.to_string(), num(r.s_final), num(r.sup_u_final)),
                None => ("error".to_string(), String::new(), String::new()),
            };
            rows.push(vec![num(cell.x), num(cell.y), verdict, s_end, sup_u, cell.error.unwrap_or_default()]);
        }
    }
    let header = [sweep.x.param.name(), sweep.y.param.name(), "verdict", "s_end", "supU_end", "error"];
    out.csv("sweep.csv", &header, rows)?;
    out.sidecar("sweep.json", "sweep", cfg, &serde_json::json!({ "threshold": threshold, "cells": sweep.x.n * sweep.y.n }))?;
    Ok(todo.len())
}

fn load_cell(path: &std::path::Path) -> Option<CellResult> {
    let text = std::fs::read_to_string(path).ok()?;
    serde_json::from_str(&text).ok()
}
