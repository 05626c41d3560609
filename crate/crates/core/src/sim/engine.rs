use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::catalog::{gen_catalog, Catalog};
use super::ranker::{rank, RankerSpec, SearchSeed};
use super::user::{simulate_search, UserModel};
use super::SimError;
use crate::analysis::{analyze, AnalysisParams, AnalysisReport};
use crate::attribution::AttributionWindow;
use crate::counterfactual::CfHyperparams;
use crate::delivery::{coin_flip_search, coin_flip_user, layer1_assign, layer2_assign, DeliveryConfig, Layer};
use crate::interleave::interleave;
use crate::rng::StreamKey;
use crate::types::{
    EventKind, EventRecord, ExperimentId, ExposureRecord, LaneId, ListingId, Mode, RankedList, RankerLabel, SearchId,
    UserId, SCHEMA_VERSION,
};

/// Ticks between consecutive searches of a journey.
const SEARCH_SPACING: u64 = 10;
/// Bits of the search id holding the search index within a journey.
const SEARCH_BITS: u32 = 16;
const MAX_USER_ID: u64 = 1 << 47;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CatalogConfig {
    pub seed: u64,
    pub n_listings: usize,
    /// Listings a guest considers over a journey; each search shows a subset.
    pub pool_size: usize,
    pub list_len: usize,
}

impl Default for CatalogConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n_listings: 5000,
            pool_size: 30,
            list_len: 20,
        }
    }
}

fn default_lane() -> String {
    "lane-1".into()
}

fn default_event() -> EventKind {
    EventKind::Booking
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment_id: String,
    #[serde(default = "default_lane")]
    pub lane: String,
    pub mode: Mode,
    pub master_seed: u64,
    pub n_users: u64,
    #[serde(default)]
    pub catalog: CatalogConfig,
    pub control: RankerSpec,
    pub treatment: RankerSpec,
    #[serde(default)]
    pub user_model: UserModel,
    #[serde(default)]
    pub window: AttributionWindow,
    #[serde(default = "default_event")]
    pub preference_event: EventKind,
    #[serde(default)]
    pub cf_hyperparams: CfHyperparams,
    /// Traffic routing. Without it every simulated user enters the experiment.
    #[serde(default)]
    pub delivery: Option<DeliveryConfig>,
}

impl ExperimentConfig {
    /// Config with the default catalog, guests, window and hyperparameters.
    pub fn new(
        experiment_id: impl Into<String>,
        mode: Mode,
        master_seed: u64,
        n_users: u64,
        control: RankerSpec,
        treatment: RankerSpec,
    ) -> Self {
        Self {
            experiment_id: experiment_id.into(),
            lane: default_lane(),
            mode,
            master_seed,
            n_users,
            catalog: CatalogConfig::default(),
            control,
            treatment,
            user_model: UserModel::default(),
            window: AttributionWindow::default(),
            preference_event: default_event(),
            cf_hyperparams: CfHyperparams::default(),
            delivery: None,
        }
    }

    pub fn analysis_params(&self) -> AnalysisParams {
        AnalysisParams {
            experiment: self.experiment_id.clone(),
            window: self.window,
            preference_event: self.preference_event,
            cf_hyperparams: self.cf_hyperparams,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let invalid = |m: String| Err(SimError::InvalidConfig(m));
        if self.experiment_id.is_empty() {
            return invalid("experiment_id is empty".into());
        }
        if self.n_users == 0 || self.n_users >= MAX_USER_ID {
            return invalid(format!("n_users must be in 1..{MAX_USER_ID}"));
        }
        let c = &self.catalog;
        if c.list_len == 0 || c.list_len > c.pool_size || c.pool_size > c.n_listings {
            return invalid(format!(
                "need 1 <= list_len ({}) <= pool_size ({}) <= n_listings ({})",
                c.list_len, c.pool_size, c.n_listings
            ));
        }
        for spec in [&self.control, &self.treatment] {
            spec.validate()?;
            check_swap_depth(spec, c.list_len)?;
        }
        self.user_model.validate()?;
        self.window
            .validate()
            .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        self.cf_hyperparams.validate()?;
        if let Some(d) = &self.delivery {
            d.validate()?;
            match self.mode {
                Mode::Ab if d.online_eval_fraction >= 1.0 => {
                    return invalid("AB mode needs online_eval_fraction < 1".into());
                }
                Mode::Ab => {}
                _ if d.online_eval_fraction <= 0.0 => {
                    return invalid(format!("{} mode needs online_eval_fraction > 0", self.mode));
                }
                _ => {
                    if !d.lanes.iter().any(|l| l.id.0 == self.lane && l.mode == self.mode) {
                        return invalid(format!(
                            "no {} lane named `{}` in delivery config",
                            self.mode, self.lane
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

fn check_swap_depth(spec: &RankerSpec, len: usize) -> Result<(), SimError> {
    match spec {
        RankerSpec::NoisyUtility { .. } => Ok(()),
        RankerSpec::RandomToTop { base, .. } | RankerSpec::DiversityRerank { base, .. } => check_swap_depth(base, len),
        RankerSpec::PositionSwap { base, i, j } => {
            if *i > len || *j > len {
                return Err(SimError::InvalidRanker(format!(
                    "swap ranks ({i}, {j}) exceed list_len {len}"
                )));
            }
            check_swap_depth(base, len)
        }
    }
}

/// Exposures and events of one simulated user, in time order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UserTrace {
    pub exposures: Vec<ExposureRecord>,
    pub events: Vec<EventRecord>,
}

/// A validated configuration with its catalog, ready to simulate users.
#[derive(Debug, Clone)]
pub struct Simulator {
    cfg: ExperimentConfig,
    catalog: Catalog,
    experiment: ExperimentId,
    lane: LaneId,
    pool_key: StreamKey,
    candidate_key: StreamKey,
    behavior_key: StreamKey,
}

impl Simulator {
    pub fn new(cfg: ExperimentConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        let root = StreamKey::new(cfg.master_seed, "users");
        Ok(Self {
            catalog: gen_catalog(cfg.catalog.seed, cfg.catalog.n_listings),
            experiment: ExperimentId::new(cfg.experiment_id.clone()),
            lane: LaneId::new(cfg.lane.clone()),
            pool_key: root.child("pool"),
            candidate_key: root.child("candidates"),
            behavior_key: root.child("behavior"),
            cfg,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    /// Users entering the experiment, in id order.
    pub fn users(&self) -> Vec<UserId> {
        let Some(d) = &self.cfg.delivery else {
            return (1..=self.cfg.n_users).map(UserId).collect();
        };
        let routed = |u: UserId| match (self.cfg.mode, layer1_assign(u, d)) {
            (Mode::Ab, layer) => layer == Layer::Ab,
            (_, Layer::Ab) => false,
            (mode, Layer::OnlineEval) => layer2_assign(u, d).is_ok_and(|l| l.id == self.lane && l.mode == mode),
        };
        (1..MAX_USER_ID)
            .map(UserId)
            .filter(|&u| routed(u))
            .take(self.cfg.n_users as usize)
            .collect()
    }

    fn ranked(&self, spec: &RankerSpec, label: RankerLabel, candidates: &[ListingId], search: SearchId) -> RankedList {
        let seed = SearchSeed {
            master_seed: self.cfg.master_seed,
            search,
        };
        let items = rank(spec, &self.catalog, candidates, seed).expect("ranker validated against list length");
        RankedList::new(label, search, items)
    }

    /// Simulates one user's journey. Depends only on the config and the user id.
    pub fn user_trace(&self, user: UserId) -> UserTrace {
        let cat = &self.cfg.catalog;
        let mode = self.cfg.mode;
        let mut pool_rng = self.pool_key.rng(user.0);
        let pool: Vec<ListingId> = sample(&mut pool_rng, cat.n_listings, cat.pool_size)
            .into_iter()
            .map(|i| ListingId(i as u64 + 1))
            .collect();
        let mut cand_rng = self.candidate_key.rng(user.0);
        let mut behavior_rng = self.behavior_key.rng(user.0);
        let shown_ranker = (mode != Mode::Interleaving).then(|| coin_flip_user(user, &self.experiment));

        let mut trace = UserTrace::default();
        for s in 0..u64::from(self.cfg.user_model.searches_per_journey) {
            let search = SearchId((user.0 << SEARCH_BITS) | s);
            let ts = SEARCH_SPACING * (s + 1);
            let candidates: Vec<ListingId> = sample(&mut cand_rng, cat.pool_size, cat.list_len)
                .into_iter()
                .map(|i| pool[i])
                .collect();
            let want = |w: RankerLabel| match mode {
                Mode::Ab => shown_ranker == Some(w),
                _ => true,
            };
            let list_of = |w: RankerLabel| {
                let spec = match w {
                    RankerLabel::Control => &self.cfg.control,
                    RankerLabel::Treatment => &self.cfg.treatment,
                };
                if want(w) {
                    self.ranked(spec, w, &candidates, search)
                } else {
                    RankedList::new(w, search, Vec::new())
                }
            };
            let list_control = list_of(RankerLabel::Control);
            let list_treatment = list_of(RankerLabel::Treatment);
            let interleaved = (mode == Mode::Interleaving).then(|| {
                let c_first = coin_flip_search(search, &self.experiment);
                interleave(&list_control, &list_treatment, c_first).expect("candidate lists are duplicate-free")
            });
            let exposure = ExposureRecord {
                schema_version: SCHEMA_VERSION,
                search,
                user,
                timestamp: ts,
                lane: self.lane.clone(),
                mode,
                shown_ranker,
                list_control,
                list_treatment,
                interleaved,
            };
            let shown = exposure.shown_items();
            let utilities: Vec<f64> = shown.iter().map(|&id| self.catalog.utility(id)).collect();
            let outcome = simulate_search(&utilities, &self.cfg.user_model, &mut behavior_rng);
            trace.exposures.push(exposure);
            for pos in outcome.clicks {
                trace
                    .events
                    .push(EventRecord::new(user, search, shown[pos], EventKind::Click, ts + 1));
            }
            if let Some(pos) = outcome.booking {
                trace
                    .events
                    .push(EventRecord::new(user, search, shown[pos], EventKind::Booking, ts + 2));
                break;
            }
        }
        trace
    }
}

/// Logs and analysis of one simulated experiment.
#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub exposures: Vec<ExposureRecord>,
    pub events: Vec<EventRecord>,
    pub report: AnalysisReport,
}

/// Simulates every routed user and analyzes the resulting logs.
///
/// Users are simulated in parallel but concatenated in id order, so the logs
/// do not depend on the thread count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentRun, SimError> {
    let sim = Simulator::new(cfg.clone())?;
    let users = sim.users();
    let traces = crate::par::map_range(0..users.len() as u64, |i| sim.user_trace(users[i as usize]));
    let mut exposures = Vec::new();
    let mut events = Vec::new();
    for t in traces {
        exposures.extend(t.exposures);
        events.extend(t.events);
    }
    let report = analyze(&exposures, &events, &cfg.analysis_params())?;
    Ok(ExperimentRun {
        exposures,
        events,
        report,
    })
}
