//! Search for a finite solvable cover on which an automorphism acts with
//! infinite order on first homology, and self-contained certificates of the
//! result.
//!
//! The search follows one route: if the abelianized action already has
//! infinite order the base certificate is immediate. Otherwise the map is
//! replaced by a power that acts trivially on homology and survives the
//! group-like vertex test, and each shadow vertex is chased through a tower
//! of mod-p covers, re-lifting and re-powering per stage, until either some
//! cover's homology action has infinite order (checked exactly) or the
//! nilpotent enfeoffment level of the tracked extremal subgraph reaches the
//! abelian layer, where a large character picks the final unwinding cover.
//! Certificates record the tower and are re-derived from scratch by the
//! verifier; nothing in the output depends on floating point.

use crate::extremal::{extremal_subgraph, orbit_count};
use crate::graphs::{
    homology_basis, lift_map, mod_p_cover, rose, rose_map, Cover, Graph, GraphMap, HomologyBasis,
};
use crate::group_ring::{Character, LaurentPoly};
use crate::nilpotent::{enfeoffment_level, EnfeoffmentLevel};
use crate::shadow::{group_like_power, shadow_phi};
use crate::spectra::{homology_action, integer_order, integer_spectral_radius, OrderVerdict};
use crate::transition::{build_transition, trace_sum_tk, EdgeSubset, TransitionGraph};
use crate::words::{FreeAut, IntMatrix};
use crate::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

type Q = BigRational;

/// Budgets and tolerances for one run. Everything that can steer the search
/// is in here and is embedded in every output, so runs are reproducible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Config {
    /// moduli tried for descent stages, in order
    pub primes: Vec<u64>,
    /// largest cycle length probed by trace sums
    pub k_max: usize,
    /// deepest nilpotent level probed
    pub class_max: usize,
    /// tower stages per vertex
    pub max_stages: usize,
    /// total edges allowed in any cover
    pub edge_cap: u64,
    /// simple-cycle enumeration cap
    pub cycle_cap: u64,
    /// denominators scanned for unwinding characters, in order
    pub char_denominators: Vec<u64>,
    /// character grid evaluations allowed per scan
    pub char_eval_budget: u64,
    /// agreement tolerance for specialization cross-checks
    pub specialize_tol: f64,
    /// slack accepted around spectral radius comparisons
    pub radius_slack: f64,
    /// tolerance for heuristic (non-certified) verdicts
    pub heuristic_tol: f64,
    /// seed for the randomized empirical-shadow path; unused elsewhere
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Config {
        Config {
            primes: vec![2, 3, 5, 7, 11],
            k_max: 8,
            class_max: 4,
            max_stages: 3,
            edge_cap: 100_000,
            cycle_cap: 1_000_000,
            char_denominators: vec![2, 3, 4, 5, 6, 8, 12],
            char_eval_budget: 1_000_000,
            specialize_tol: 1e-10,
            radius_slack: 1e-8,
            heuristic_tol: 1e-6,
            seed: 0,
        }
    }
}

/// One mod-p stage of a cover tower. The stage is rebuilt from these fields
/// alone: the modulus, the homology rank of the graph below (a consistency
/// check), the chosen basepoint lift, and the power applied to the lifted
/// map so that it acts trivially on the new cover's homology.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerStage {
    pub p: u64,
    #[serde(rename = "stage-rank")]
    pub stage_rank: usize,
    #[serde(rename = "lift-basepoint")]
    pub lift_basepoint: usize,
    #[serde(rename = "stage-power")]
    pub stage_power: u64,
}

/// Checkable claim: the basepoint-fixing lift of f^power to the tower's
/// total cover acts on its first homology by `matrix`, whose order is
/// infinite. Every field needed to rebuild the claim from scratch is
/// present; `hash` is the SHA-256 of the JSON with the hash field empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub automorphism: String,
    pub tower: Vec<TowerStage>,
    pub power: u64,
    pub matrix: Vec<Vec<String>>,
    pub verdict: OrderVerdict,
    pub budgets: Config,
    pub toolversion: String,
    pub hash: String,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct VertexProgress {
    pub vertex: Vec<String>,
    pub history: Vec<String>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SearchReport {
    pub progress: Vec<VertexProgress>,
    pub budgets_hit: Vec<String>,
    pub best_radius: f64,
    pub note: Option<String>,
}

#[derive(Debug)]
pub enum SearchOutcome {
    Certified(Certificate),
    Exhausted(SearchReport),
}

pub fn matrix_to_strings(m: &IntMatrix) -> Vec<Vec<String>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m.get(i, j).to_string()).collect())
        .collect()
}

pub fn matrix_from_strings(rows: &[Vec<String>]) -> Result<IntMatrix> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    let mut m = IntMatrix::zeros(r, c);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != c {
            return Err(Error::Invalid("ragged certificate matrix".into()));
        }
        for (j, s) in row.iter().enumerate() {
            let v: BigInt = s
                .parse()
                .map_err(|_| Error::Invalid(format!("bad matrix entry {s:?}")))?;
            m.set(i, j, v);
        }
    }
    Ok(m)
}

/// SHA-256 of the certificate JSON with its hash field blanked.
pub fn certificate_hash(cert: &Certificate) -> Result<String> {
    let mut blank = cert.clone();
    blank.hash = String::new();
    let json = serde_json::to_string(&blank)?;
    let digest = Sha256::digest(json.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Tower-building state: the current cover graph, the map living on it
/// (always some lift of a power of the input), and how we got here.
#[derive(Clone)]
struct CoverState {
    graph: Graph,
    basis: HomologyBasis,
    map: GraphMap,
    power: u64,
    tower: Vec<TowerStage>,
    cover: Option<Cover>,
}

fn track_radius(best: &mut f64, m: &IntMatrix) {
    if let Ok(r) = integer_spectral_radius(m) {
        if r > *best {
            *best = r;
        }
    }
}

fn level_label(l: EnfeoffmentLevel) -> String {
    match l {
        EnfeoffmentLevel::Level(i) => format!("level {i}"),
        EnfeoffmentLevel::Exceeded => "exceeded".into(),
    }
}

fn assemble_certificate(
    f: &FreeAut,
    state: &CoverState,
    matrix: &IntMatrix,
    verdict: OrderVerdict,
    config: &Config,
) -> Result<Certificate> {
    let mut cert = Certificate {
        automorphism: f.to_text(),
        tower: state.tower.clone(),
        power: state.power,
        matrix: matrix_to_strings(matrix),
        verdict,
        budgets: config.clone(),
        toolversion: env!("CARGO_PKG_VERSION").into(),
        hash: String::new(),
    };
    cert.hash = certificate_hash(&cert)?;
    let check = verify_certificate(&cert)?;
    if !check.ok {
        return Err(Error::Invalid(format!(
            "certificate failed self-verification: {}",
            check.diffs.join("; ")
        )));
    }
    Ok(cert)
}

/// Columns are the homology classes, downstairs, of the projected upstairs
/// basis loops. Composing with a functional below pulls it back upstairs.
fn projection_matrix(
    cover: &Cover,
    below: &HomologyBasis,
    above: &HomologyBasis,
) -> Vec<Vec<i64>> {
    let total = cover.total();
    let mut cols = Vec::with_capacity(above.rank());
    for j in 0..above.rank() {
        let lp = above.basis_loop(total, j);
        cols.push(below.path_class(&cover.project_path(&lp)));
    }
    let rows = below.rank();
    (0..rows).map(|i| (0..above.rank()).map(|j| cols[j][i]).collect()).collect()
}

fn pull_back(omega: &[Q], proj: &[Vec<i64>]) -> Vec<Q> {
    let cols = proj.first().map_or(0, |r| r.len());
    (0..cols)
        .map(|j| {
            omega
                .iter()
                .zip(proj)
                .map(|(w, row)| w * Q::from_integer(BigInt::from(row[j])))
                .sum()
        })
        .collect()
}

fn qdot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Deterministic scan for a character of nontrivial order whose evaluation
/// of the trace beats the threshold. Same grid order as the group-ring
/// scan, with the trivial character excluded since its cover unwinds
/// nothing.
fn unwinding_character(
    t: &LaurentPoly,
    threshold: f64,
    denominators: &[u64],
    budget: u64,
) -> Option<Character> {
    let r = t.rank();
    let mut spent: u64 = 0;
    for &den in denominators {
        if den < 2 {
            continue;
        }
        let total = (den as u128).checked_pow(r as u32)?;
        if total > u64::MAX as u128 {
            return None;
        }
        let total = total as u64;
        if spent.saturating_add(total) > budget {
            return None;
        }
        spent += total;
        for ix in 0..total {
            let mut v = vec![0i64; r];
            let mut rest = ix;
            for axis in (0..r).rev() {
                v[axis] = (rest % den) as i64;
                rest /= den;
            }
            let psi = Character::from_grid(&v, den);
            if psi.is_trivial() {
                continue;
            }
            if t.specialize(&psi).norm() > threshold {
                return Some(psi);
            }
        }
    }
    None
}

enum ExactAttempt {
    Certified(Box<Certificate>),
    Failed,
}

/// At an abelian-level cover, look for the exact endgame: a character of
/// the cover's homology with a large trace evaluation picks a final mod-m
/// stage, and the integer order of the lifted action there decides.
#[allow(clippy::too_many_arguments)]
fn try_exact_certificate(
    f: &FreeAut,
    state: &CoverState,
    t_cur: &TransitionGraph,
    sub_edges: &EdgeSubset,
    config: &Config,
    best_radius: &mut f64,
    history: &mut Vec<String>,
) -> Result<ExactAttempt> {
    let r = state.basis.rank();
    let identity = IntMatrix::identity(r);
    let m_edges = state.graph.num_edges();
    let threshold = (m_edges as f64).sqrt();
    for k in 1..=config.k_max {
        for (scope, name) in [(None, "full"), (Some(sub_edges), "extremal")] {
            let trace = trace_sum_tk(t_cur, &identity, k, scope)?;
            let l2_gate = trace.l2_norm_sq() > BigInt::from(m_edges);
            let mut orbit_gate = false;
            if let Some(cover) = &state.cover {
                let orbits = orbit_count(&trace, cover)?;
                orbit_gate = orbits >= homology_basis(cover.base())?.rank() + 1;
                history.push(format!(
                    "k={k} {name} trace has {orbits} deck orbits on its support"
                ));
            }
            if !(l2_gate || orbit_gate) {
                continue;
            }
            let psi = match unwinding_character(
                &trace,
                threshold,
                &config.char_denominators,
                config.char_eval_budget,
            ) {
                Some(psi) => psi,
                None => continue,
            };
            let (order, _) = psi.cyclic_data();
            let modulus = match order.to_u64() {
                Some(m) if m >= 2 => m,
                _ => continue,
            };
            let projected_edges =
                (modulus as u128).saturating_pow(r as u32) * state.graph.num_edges() as u128;
            if projected_edges > config.edge_cap as u128 {
                history.push(format!(
                    "k={k} character modulus {modulus} would exceed the edge cap"
                ));
                continue;
            }
            let cover = mod_p_cover(&state.graph, &state.basis, modulus)?;
            let lifted = lift_map(&cover, &state.basis, &state.map)?;
            let h = homology_action(cover.total(), &lifted)?;
            track_radius(best_radius, &h);
            let verdict = integer_order(&h);
            history.push(format!(
                "k={k} {name} trace: character of order {modulus} -> homology order {:?}",
                verdict
            ));
            if verdict.is_infinite() {
                let mut final_state = state.clone();
                final_state.tower.push(TowerStage {
                    p: modulus,
                    stage_rank: state.basis.rank(),
                    lift_basepoint: cover.total().basepoint(),
                    stage_power: 1,
                });
                let cert = assemble_certificate(f, &final_state, &h, verdict, config)?;
                return Ok(ExactAttempt::Certified(Box::new(cert)));
            }
        }
    }
    Ok(ExactAttempt::Failed)
}

enum DescentOutcome {
    Certified(Box<Certificate>),
    Stopped(VertexProgress),
}

fn level_drops(old: EnfeoffmentLevel, new: EnfeoffmentLevel) -> bool {
    match (old, new) {
        (_, EnfeoffmentLevel::Exceeded) => false,
        (EnfeoffmentLevel::Exceeded, EnfeoffmentLevel::Level(_)) => true,
        (EnfeoffmentLevel::Level(a), EnfeoffmentLevel::Level(b)) => b < a,
    }
}

#[allow(clippy::too_many_arguments)]
fn descend_vertex(
    f: &FreeAut,
    base_state: &CoverState,
    t_base: &TransitionGraph,
    vertex: &[Q],
    omega: &[Q],
    config: &Config,
    best_radius: &mut f64,
    budgets_hit: &mut Vec<String>,
) -> Result<DescentOutcome> {
    let mut progress = VertexProgress {
        vertex: vertex.iter().map(|q| q.to_string()).collect(),
        history: Vec::new(),
    };
    let mut state = base_state.clone();
    let mut t_cur = t_base.clone();
    let mut cur_omega = omega.to_vec();

    let sub = extremal_subgraph(&t_cur, vertex, &cur_omega, config.cycle_cap)?;
    let mut sub_edges = sub.edges;
    let mut level = match enfeoffment_level(&t_cur, &sub_edges, config.class_max, config.k_max) {
        Ok(l) => l,
        Err(Error::BudgetExceeded { what, got, limit }) => {
            budgets_hit.push(format!("{what}: {got} > {limit}"));
            progress.history.push("aborted: enumeration budget".into());
            return Ok(DescentOutcome::Stopped(progress));
        }
        Err(e) => return Err(e),
    };
    progress.history.push(format!("base {}", level_label(level)));

    loop {
        match level {
            EnfeoffmentLevel::Level(1) => {
                match try_exact_certificate(
                    f,
                    &state,
                    &t_cur,
                    &sub_edges,
                    config,
                    best_radius,
                    &mut progress.history,
                )? {
                    ExactAttempt::Certified(cert) => return Ok(DescentOutcome::Certified(cert)),
                    ExactAttempt::Failed => {
                        progress
                            .history
                            .push("abelian level reached; exact criteria not met here".into());
                        return Ok(DescentOutcome::Stopped(progress));
                    }
                }
            }
            EnfeoffmentLevel::Exceeded => {
                progress
                    .history
                    .push("level budget exceeded before the abelian layer".into());
                return Ok(DescentOutcome::Stopped(progress));
            }
            EnfeoffmentLevel::Level(_) => {}
        }
        if state.tower.len() >= config.max_stages {
            budgets_hit.push(format!("tower stages: {} at cap", state.tower.len()));
            progress.history.push("aborted: stage budget".into());
            return Ok(DescentOutcome::Stopped(progress));
        }

        let mut advanced = false;
        for &p in &config.primes {
            let r = state.basis.rank();
            let projected =
                (p as u128).saturating_pow(r as u32) * state.graph.num_edges() as u128;
            if projected > config.edge_cap as u128 {
                budgets_hit.push(format!("edges: mod-{p} stage needs {projected}"));
                continue;
            }
            let cover = mod_p_cover(&state.graph, &state.basis, p)?;
            let lifted = lift_map(&cover, &state.basis, &state.map)?;
            let total = cover.total().clone();
            let total_basis = homology_basis(&total)?;
            let sigma_up = homology_action(&total, &lifted)?;
            track_radius(best_radius, &sigma_up);
            let order_up = integer_order(&sigma_up);
            if order_up.is_infinite() {
                let mut final_state = state.clone();
                final_state.tower.push(TowerStage {
                    p,
                    stage_rank: state.basis.rank(),
                    lift_basepoint: total.basepoint(),
                    stage_power: 1,
                });
                let cert = assemble_certificate(f, &final_state, &sigma_up, order_up, config)?;
                return Ok(DescentOutcome::Certified(Box::new(cert)));
            }
            let d = order_up.finite_order().expect("finite order has a value");
            let map_up = lifted.power(&total, d as usize);
            let t_up = match build_transition(&total, &total_basis, &map_up) {
                Ok(t) => t,
                Err(Error::BudgetExceeded { what, got, limit }) => {
                    budgets_hit.push(format!("{what}: {got} > {limit}"));
                    continue;
                }
                Err(e) => return Err(e),
            };
            let proj = projection_matrix(&cover, &state.basis, &total_basis);
            let omega_up = pull_back(&cur_omega, &proj);
            let shadow_up = match shadow_phi(&t_up, config.cycle_cap) {
                Ok(s) => s,
                Err(Error::BudgetExceeded { what, got, limit }) => {
                    budgets_hit.push(format!("{what}: {got} > {limit}"));
                    continue;
                }
                Err(e) => return Err(e),
            };
            let verts = shadow_up.polytope.vertices();
            let mut pick = 0usize;
            for (i, w) in verts.iter().enumerate() {
                if qdot(&omega_up, w) > qdot(&omega_up, &verts[pick]) {
                    pick = i;
                }
            }
            let v_up = verts[pick].clone();
            let omega_strict = shadow_up.polytope.support_at(pick).to_vec();
            let sub_up = extremal_subgraph(&t_up, &v_up, &omega_strict, config.cycle_cap)?;
            let level_up =
                match enfeoffment_level(&t_up, &sub_up.edges, config.class_max, config.k_max) {
                    Ok(l) => l,
                    Err(Error::BudgetExceeded { what, got, limit }) => {
                        budgets_hit.push(format!("{what}: {got} > {limit}"));
                        continue;
                    }
                    Err(e) => return Err(e),
                };
            if level_drops(level, level_up) {
                progress.history.push(format!(
                    "mod-{p} stage (power {d}): {} -> {}",
                    level_label(level),
                    level_label(level_up)
                ));
                state.tower.push(TowerStage {
                    p,
                    stage_rank: state.basis.rank(),
                    lift_basepoint: total.basepoint(),
                    stage_power: d,
                });
                state.graph = total;
                state.basis = total_basis;
                state.map = map_up;
                state.power *= d;
                state.cover = Some(cover);
                t_cur = t_up;
                cur_omega = omega_up;
                sub_edges = sub_up.edges;
                level = level_up;
                advanced = true;
                break;
            }
            progress.history.push(format!(
                "mod-{p} stage kept {} (no descent)",
                level_label(level_up)
            ));
        }
        if !advanced {
            progress
                .history
                .push("no modulus in the scan lowered the level".into());
            return Ok(DescentOutcome::Stopped(progress));
        }
    }
}

/// Full search. Returns a verified certificate as soon as any route yields
/// an exact infinite order, otherwise a report of everything tried.
pub fn run_search(f: &FreeAut, config: &Config) -> Result<SearchOutcome> {
    if !f.check_automorphism() {
        return Err(Error::NotAnAutomorphism(
            "the stated images do not invert".into(),
        ));
    }
    let n = f.rank();
    let g = rose(n);
    let basis = homology_basis(&g)?;
    let mut report = SearchReport::default();

    let sigma_matrix = homology_action(&g, &rose_map(f))?;
    track_radius(&mut report.best_radius, &sigma_matrix);
    let sigma_order = integer_order(&sigma_matrix);
    if sigma_order.is_infinite() {
        let state = CoverState {
            graph: g,
            basis,
            map: rose_map(f),
            power: 1,
            tower: Vec::new(),
            cover: None,
        };
        let cert = assemble_certificate(f, &state, &sigma_matrix, sigma_order, config)?;
        return Ok(SearchOutcome::Certified(cert));
    }

    let d = sigma_order.finite_order().expect("finite order has a value");
    let f_trivial = f.power(d as usize);
    let t_trivial = build_transition(&g, &basis, &rose_map(&f_trivial))?;
    let k = group_like_power(&t_trivial, config.cycle_cap)? as u64;
    let base_power = d * k;
    let f_base = f.power(base_power as usize);
    if f_base == FreeAut::identity(n) {
        report.note = Some(
            "input has finite order, so no cover carries an infinite-order action".into(),
        );
        return Ok(SearchOutcome::Exhausted(report));
    }

    let map0 = rose_map(&f_base);
    let t0 = build_transition(&g, &basis, &map0)?;
    let shadow = shadow_phi(&t0, config.cycle_cap)?;
    let base_state = CoverState {
        graph: g,
        basis,
        map: map0,
        power: base_power,
        tower: Vec::new(),
        cover: None,
    };

    for (vi, v) in shadow.polytope.vertices().iter().enumerate() {
        let omega = shadow.polytope.support_at(vi).to_vec();
        match descend_vertex(
            f,
            &base_state,
            &t0,
            v,
            &omega,
            config,
            &mut report.best_radius,
            &mut report.budgets_hit,
        )? {
            DescentOutcome::Certified(cert) => return Ok(SearchOutcome::Certified(*cert)),
            DescentOutcome::Stopped(progress) => report.progress.push(progress),
        }
    }
    Ok(SearchOutcome::Exhausted(report))
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct VerifyReport {
    pub ok: bool,
    pub diffs: Vec<String>,
}

/// Rebuild everything a certificate claims, from its own fields only, and
/// compare. The tower is reconstructed stage by stage, the stated power of
/// the automorphism is re-lifted, its homology action recomputed, and the
/// order verdict re-derived; deck commutativity is spot-checked on small
/// stages (every stage is an abelian cover by construction).
pub fn verify_certificate(cert: &Certificate) -> Result<VerifyReport> {
    let mut diffs = Vec::new();

    match certificate_hash(cert) {
        Ok(h) => {
            if h != cert.hash {
                diffs.push("content hash does not match".into());
            }
        }
        Err(e) => diffs.push(format!("hash recomputation failed: {e}")),
    }

    let f = match FreeAut::parse_text(&cert.automorphism) {
        Ok(f) => f,
        Err(e) => {
            diffs.push(format!("automorphism does not parse: {e}"));
            return Ok(VerifyReport { ok: false, diffs });
        }
    };
    if !f.check_automorphism() {
        diffs.push("stated map is not an automorphism".into());
    }

    let stage_product: u64 = cert.tower.iter().map(|s| s.stage_power.max(1)).product();
    if cert.power == 0 || cert.power % stage_product != 0 {
        diffs.push(format!(
            "power {} is not divisible by the stage powers {}",
            cert.power, stage_product
        ));
        return Ok(VerifyReport { ok: false, diffs });
    }
    let base_power = cert.power / stage_product;

    let mut graph = rose(f.rank());
    let mut basis = homology_basis(&graph)?;
    let mut map = rose_map(&f.power(base_power as usize));
    for (i, stage) in cert.tower.iter().enumerate() {
        if stage.p < 2 {
            diffs.push(format!("stage {i}: modulus {} is not a cover", stage.p));
            return Ok(VerifyReport { ok: false, diffs });
        }
        if stage.stage_rank != basis.rank() {
            diffs.push(format!(
                "stage {i}: stated rank {} but the graph below has rank {}",
                stage.stage_rank,
                basis.rank()
            ));
            return Ok(VerifyReport { ok: false, diffs });
        }
        let cover = match mod_p_cover(&graph, &basis, stage.p) {
            Ok(c) => c,
            Err(e) => {
                diffs.push(format!("stage {i}: cover rebuild failed: {e}"));
                return Ok(VerifyReport { ok: false, diffs });
            }
        };
        if stage.lift_basepoint != cover.total().basepoint() {
            diffs.push(format!(
                "stage {i}: stated basepoint {} differs from the canonical lift {}",
                stage.lift_basepoint,
                cover.total().basepoint()
            ));
        }
        if cover.sheets() <= 4096 {
            if !cover.is_regular() {
                diffs.push(format!("stage {i}: cover is not regular"));
            }
            let deck = cover.deck();
            let commute = deck.iter().enumerate().all(|(a, da)| {
                deck.iter().skip(a + 1).all(|db| {
                    (0..da.vertices.len())
                        .all(|v| da.vertices[db.vertices[v]] == db.vertices[da.vertices[v]])
                })
            });
            if !commute {
                diffs.push(format!("stage {i}: deck group is not abelian"));
            }
        }
        let lifted = match lift_map(&cover, &basis, &map) {
            Ok(l) => l,
            Err(e) => {
                diffs.push(format!("stage {i}: map does not lift: {e}"));
                return Ok(VerifyReport { ok: false, diffs });
            }
        };
        let total = cover.total().clone();
        map = lifted.power(&total, stage.stage_power.max(1) as usize);
        graph = total;
        basis = homology_basis(&graph)?;
    }

    let h = homology_action(&graph, &map)?;
    match matrix_from_strings(&cert.matrix) {
        Ok(stated) => {
            if stated != h {
                diffs.push("homology matrix does not match the recomputation".into());
            }
        }
        Err(e) => diffs.push(format!("stated matrix unreadable: {e}")),
    }
    let verdict = integer_order(&h);
    if !verdict.is_infinite() {
        diffs.push("recomputed homology order is finite".into());
    }
    if verdict != cert.verdict {
        diffs.push("stated verdict differs from the recomputation".into());
    }

    Ok(VerifyReport { ok: diffs.is_empty(), diffs })
}

/// The quantities the two sufficiency criteria compare, for the lift of
/// f^power to the given cover: trace norms against the edge count, and
/// deck orbits of the trace support against rank + 1.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceBudgetReport {
    pub l1: String,
    pub l2_sq: String,
    pub edges: usize,
    pub orbits: usize,
    pub needed_orbits: usize,
    pub l2_exceeds_edges: bool,
    pub orbits_sufficient: bool,
    pub homology_order: OrderVerdict,
    pub hypothesis_note: Option<String>,
}

pub fn report_trace_budget(f: &FreeAut, cover: &Cover, power: usize) -> Result<TraceBudgetReport> {
    let base = cover.base();
    if base.num_edges() != f.rank() || base.num_vertices() != 1 {
        return Err(Error::Invalid("cover base is not the rose of the map".into()));
    }
    let basis = homology_basis(base)?;
    let lifted = lift_map(cover, &basis, &rose_map(&f.power(power)))?;
    let total = cover.total();
    let total_basis = homology_basis(total)?;
    let h = homology_action(total, &lifted)?;
    let t = build_transition(total, &total_basis, &lifted)?;
    let trace = trace_sum_tk(&t, &h, 1, None)?;
    let edges = total.num_edges();
    let orbits = orbit_count(&trace, cover)?;
    let needed_orbits = basis.rank() + 1;
    let l2 = trace.l2_norm_sq();
    let l2_exceeds_edges = l2 > BigInt::from(edges);
    let orbits_sufficient = orbits >= needed_orbits;
    let homology_order = integer_order(&h);
    let hypothesis_note = if (l2_exceeds_edges || orbits_sufficient)
        && !homology_order.is_infinite()
    {
        Some(
            "a sufficiency criterion holds but the homology order is finite; the criteria \
             presuppose an expanding irreducible representative"
                .into(),
        )
    } else {
        None
    };
    Ok(TraceBudgetReport {
        l1: trace.l1_norm().to_string(),
        l2_sq: l2.to_string(),
        edges,
        orbits,
        needed_orbits,
        l2_exceeds_edges,
        orbits_sufficient,
        homology_order,
        hypothesis_note,
    })
}
