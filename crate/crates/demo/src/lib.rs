//! Browser bindings for a handful of rankexp operations.
//!
//! Each export takes plain numbers and strings and returns a JSON string, so
//! the page needs no generated TypeScript types. The pure functions below
//! the bindings are what the native tests exercise.

use rankexp::counterfactual::{decompose, gain, win_loss, Bucket, PositionPair};
use rankexp::sim::{run_experiment, ExperimentConfig, RankerSpec};
use rankexp::{interleave, CfHyperparams, ListingId, Mode, RankedList, RankerLabel, SearchId};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn to_js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

/// Team-draft merge of two whitespace-separated item lists.
#[wasm_bindgen(js_name = interleaveLists)]
pub fn interleave_lists_js(control: &str, treatment: &str, control_first: bool) -> Result<String, JsValue> {
    to_js(interleave_lists(control, treatment, control_first))
}

/// Gain, bucket and win/loss for every shown rank against one counterfactual rank.
#[wasm_bindgen(js_name = gainTable)]
pub fn gain_table_js(r_cf: u32, max_rank: u32, k: u32, alpha: u32, gamma: f64) -> Result<String, JsValue> {
    to_js(gain_table(r_cf, max_rank, k, alpha, gamma))
}

/// Small simulated experiment; returns every estimate of the report.
#[wasm_bindgen(js_name = simulate)]
pub fn simulate_js(mode: &str, control_sd: f64, treatment_sd: f64, n_users: u32, seed: u32) -> Result<String, JsValue> {
    to_js(simulate(mode, control_sd, treatment_sd, n_users, seed))
}

#[derive(Debug, Serialize)]
struct MergedItem {
    item: String,
    team: Option<&'static str>,
}

pub fn interleave_lists(control: &str, treatment: &str, control_first: bool) -> Result<String, String> {
    let mut names: Vec<String> = Vec::new();
    let mut ids = |text: &str| -> Vec<ListingId> {
        text.split_whitespace()
            .map(|tok| {
                let pos = names.iter().position(|n| n == tok).unwrap_or_else(|| {
                    names.push(tok.to_string());
                    names.len() - 1
                });
                ListingId(pos as u64 + 1)
            })
            .collect()
    };
    let c = RankedList::new(RankerLabel::Control, SearchId(1), ids(control));
    let t = RankedList::new(RankerLabel::Treatment, SearchId(1), ids(treatment));
    let merged = interleave(&c, &t, control_first).map_err(|e| e.to_string())?;
    let items: Vec<MergedItem> = merged
        .entries
        .iter()
        .map(|e| MergedItem {
            item: names[e.listing.0 as usize - 1].clone(),
            team: e.team.map(|t| match t {
                RankerLabel::Control => "C",
                RankerLabel::Treatment => "T",
            }),
        })
        .collect();
    serde_json::to_string(&items).map_err(|e| e.to_string())
}

#[derive(Debug, Serialize)]
struct GainRow {
    r_shown: u32,
    gain: f64,
    bucket: Bucket,
    win: f64,
    loss: f64,
}

pub fn gain_table(r_cf: u32, max_rank: u32, k: u32, alpha: u32, gamma: f64) -> Result<String, String> {
    let h = CfHyperparams {
        k,
        alpha,
        gamma,
        ..CfHyperparams::default()
    };
    h.validate().map_err(|e| e.to_string())?;
    if r_cf == 0 || max_rank == 0 || max_rank > 200 {
        return Err("ranks start at 1 and max_rank is at most 200".into());
    }
    let rows: Vec<GainRow> = (1..=max_rank)
        .map(|r| {
            let p = PositionPair::new(r, r_cf);
            let (win, loss) = win_loss(&p, &h);
            GainRow {
                r_shown: r,
                gain: gain(&p, &h),
                bucket: decompose(&p, &h),
                win,
                loss,
            }
        })
        .collect();
    serde_json::to_string(&rows).map_err(|e| e.to_string())
}

#[derive(Debug, Serialize)]
struct Estimate {
    metric: String,
    tau: f64,
    p_value: f64,
}

pub fn simulate(mode: &str, control_sd: f64, treatment_sd: f64, n_users: u32, seed: u32) -> Result<String, String> {
    let mode: Mode = mode.parse()?;
    if n_users > 20_000 {
        return Err("at most 20000 users in the browser".into());
    }
    let cfg = ExperimentConfig::new(
        "demo",
        mode,
        seed as u64,
        n_users as u64,
        RankerSpec::noisy(control_sd),
        RankerSpec::noisy(treatment_sd),
    );
    let run = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let rows: Vec<Estimate> = run
        .report
        .estimates()
        .into_iter()
        .map(|(metric, tau, p_value)| Estimate { metric, tau, p_value })
        .collect();
    serde_json::to_string(&rows).map_err(|e| e.to_string())
}
