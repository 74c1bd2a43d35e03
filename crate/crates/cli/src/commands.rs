//! Subcommand bodies. Each returns the rendered output and whether the run
//! counts as a failure for the exit code.

use rayon::prelude::*;
use serde::Serialize;

use rbl_core::acceptance::{run_all, CriterionOutcome};
use rbl_core::asymptotics::{
    ratio_bound_chain, ratio_empirical, regret_bound_chain, regret_empirical, xi_gap, StudyRow,
};
use rbl_core::concentration::{concentration_check_mc, McReport};
use rbl_core::opt_oracle::{menu_to_tables, opt_deterministic, verify_truthful, BidLattice, MenuEntry, OptMode};
use rbl_core::robust_solvers::{maximin_bundling_value, minimax_bundling_value, Objective, SaddleReport};
use rbl_core::{make_two_point, MemberDist, TwoPointDist};

use crate::config::{ConfigError, Enumeration, Format, GammaChoice, RawSettings};
use crate::members::parse_member;

const DEFAULT_M: [usize; 3] = [100, 1_000, 10_000];

pub struct Rendered {
    pub text: String,
    pub failed: bool,
}

impl Rendered {
    fn ok(text: String) -> Self {
        Self { text, failed: false }
    }
}

fn json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn csv(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for row in rows {
        s.push_str(&row);
        s.push('\n');
    }
    s
}

pub fn saddle(raw: &RawSettings, objective: Objective, format: Format) -> Result<Rendered, ConfigError> {
    let spec = raw.spec()?;
    let ms = raw.m_list(&DEFAULT_M)?;
    let cfg = raw.solver()?;
    let reports: Vec<SaddleReport> = ms
        .iter()
        .map(|&m| match objective {
            Objective::Maximin => maximin_bundling_value(spec, m, &cfg),
            Objective::Minimax => minimax_bundling_value(spec, m, &cfg),
        })
        .collect::<Result<_, _>>()?;
    Ok(Rendered::ok(match format {
        Format::Json => json(&reports),
        Format::Csv => csv(SaddleReport::CSV_HEADER, reports.iter().map(SaddleReport::csv_row)),
    }))
}

fn render_study(rows: &[StudyRow], format: Format) -> String {
    match format {
        Format::Json => json(rows),
        Format::Csv => csv(StudyRow::CSV_HEADER, rows.iter().map(StudyRow::csv_row)),
    }
}

pub fn ratio(raw: &RawSettings, format: Format) -> Result<Rendered, ConfigError> {
    let spec = raw.spec()?;
    let cfg = raw.solver()?;
    let mut rows = Vec::new();
    for m in raw.m_list(&DEFAULT_M)? {
        let eps = raw.eps(m, spec)?;
        let gamma = match raw.gamma(m)? {
            GammaChoice::Value(g) => Some(g),
            GammaChoice::Best => None,
        };
        let chain = ratio_bound_chain(spec, m, eps, gamma)?;
        let emp = ratio_empirical(spec, m, &cfg)?;
        let base = |mode: &str, value, lower, upper, gamma| StudyRow {
            mu: spec.mu(),
            d: spec.d(),
            m,
            eps: Some(eps),
            gamma,
            objective: "ratio".into(),
            mode: mode.into(),
            value,
            lower,
            upper,
        };
        rows.push(base("bound_chain", chain.lower, chain.lower, chain.upper, Some(chain.gamma)));
        rows.push(base(emp.mode.as_str(), emp.value, emp.lower, emp.upper, None));
    }
    Ok(Rendered::ok(render_study(&rows, format)))
}

pub fn regret(raw: &RawSettings, format: Format) -> Result<Rendered, ConfigError> {
    let spec = raw.spec()?;
    let cfg = raw.solver()?;
    let mut rows = Vec::new();
    for m in raw.m_list(&DEFAULT_M)? {
        let eps = raw.eps(m, spec)?;
        let gamma = match raw.gamma(m)? {
            GammaChoice::Value(g) => g,
            GammaChoice::Best => {
                return Err(ConfigError::Invalid {
                    origin: crate::config::Origin::Flag("gamma"),
                    message: "`best` is only available for ratio".into(),
                })
            }
        };
        let chain = regret_bound_chain(spec, m, eps, gamma)?;
        let emp = regret_empirical(spec, m, &cfg)?;
        let base = |mode: &str, value, lower, upper, gamma| StudyRow {
            mu: spec.mu(),
            d: spec.d(),
            m,
            eps: Some(eps),
            gamma,
            objective: "regret".into(),
            mode: mode.into(),
            value,
            lower,
            upper,
        };
        rows.push(base("bound_chain", chain.upper, chain.lower, chain.upper, Some(gamma)));
        rows.push(base(emp.mode.as_str(), emp.value, emp.lower, emp.upper, None));
    }
    Ok(Rendered::ok(render_study(&rows, format)))
}

#[derive(Serialize)]
struct McRow<'a> {
    member: &'a str,
    #[serde(flatten)]
    report: McReport,
}

const MC_HEADER: &str = "member,m,n,eps,f,threshold,empirical,bound,std_error,pass";

pub fn concentration(raw: &RawSettings, format: Format) -> Result<Rendered, ConfigError> {
    let spec = raw.spec()?;
    let seed = raw.require_seed()?;
    let n = raw.samples(100_000)?;
    let optimize_t = raw.optimize_t()?;
    let mut members: Vec<(String, MemberDist)> = Vec::new();
    for (text, origin) in raw.members() {
        members.push((text.to_string(), parse_member(text, spec, origin)?));
    }
    if members.is_empty() {
        let alpha = 0.5f64.max(spec.min_alpha());
        members.push((format!("two_point:alpha={alpha}"), MemberDist::TwoPoint(make_two_point(spec, alpha)?)));
    }
    let mut rows = Vec::new();
    for m in raw.m_list(&[10_000])? {
        let eps = raw.eps(m, spec)?;
        for (label, member) in &members {
            let report = concentration_check_mc(spec, std::slice::from_ref(member), m, eps, n, seed, optimize_t)?;
            rows.push((label.as_str(), report));
        }
    }
    let failed = rows.iter().any(|r| !r.1.pass);
    let text = match format {
        Format::Json => json(&rows.iter().map(|&(member, report)| McRow { member, report }).collect::<Vec<_>>()),
        Format::Csv => csv(
            MC_HEADER,
            rows.iter().map(|(label, r)| {
                format!(
                    "\"{label}\",{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                    r.m, r.n, r.eps, r.f, r.threshold, r.empirical, r.bound, r.std_error, r.pass
                )
            }),
        ),
    };
    Ok(Rendered { text, failed })
}

pub fn xi(raw: &RawSettings, format: Format) -> Result<Rendered, ConfigError> {
    let gap = xi_gap(raw.spec()?)?;
    Ok(Rendered::ok(match format {
        Format::Json => json(&gap),
        Format::Csv => csv(
            "gamma,tau0,xi0,xi1,xi,lambda_at_min,tail_lower,tail_irrelevant",
            [format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                gap.gamma, gap.tau0, gap.xi0, gap.xi1, gap.xi, gap.lambda_at_min, gap.tail_lower, gap.tail_irrelevant
            )],
        ),
    }))
}

#[derive(Serialize)]
struct OracleOutput {
    m: usize,
    mode: OptMode,
    alphas: Vec<f64>,
    revenue: f64,
    menus_evaluated: u64,
    truthful: bool,
    witness: Vec<MenuEntry>,
}

pub fn opt_oracle(raw: &RawSettings, format: Format) -> Result<Rendered, ConfigError> {
    let spec = raw.spec()?;
    let ms = raw.m_list(&[2])?;
    let mode = match raw.mode()? {
        Enumeration::Full => OptMode::Full,
        Enumeration::Symmetric => OptMode::Symmetric,
    };
    let alphas = raw.alphas()?.unwrap_or_else(|| vec![0.5f64.max(spec.min_alpha())]);
    let dists: Vec<TwoPointDist> = alphas.iter().map(|&a| make_two_point(spec, a)).collect::<Result<_, _>>()?;
    let outputs: Vec<OracleOutput> = ms
        .par_iter()
        .map(|&m| {
            let r = opt_deterministic(&dists, m, mode)?;
            let lattice = BidLattice::new(&dists, m)?;
            let truthful = verify_truthful(&menu_to_tables(&r.witness, &lattice)?, &lattice)?.ok;
            Ok(OracleOutput {
                m,
                mode,
                alphas: alphas.clone(),
                revenue: r.revenue,
                menus_evaluated: r.menus_evaluated,
                truthful,
                witness: r.witness.entries().to_vec(),
            })
        })
        .collect::<Result<_, rbl_core::Error>>()?;
    let failed = outputs.iter().any(|o| !o.truthful);
    let text = match format {
        Format::Json => json(&outputs),
        Format::Csv => csv(
            "m,revenue,bundle,price",
            outputs.iter().flat_map(|o| {
                o.witness.iter().map(move |e| {
                    let bundle: Vec<String> = e.bundle.iter().map(|g| g.to_string()).collect();
                    format!("{},{:.16e},{},{:.16e}", o.m, o.revenue, bundle.join(" "), e.price)
                })
            }),
        ),
    };
    Ok(Rendered { text, failed })
}

pub fn verify(format: Format) -> Rendered {
    let outcomes: Vec<CriterionOutcome> = run_all();
    let failed = outcomes.iter().any(|o| !o.pass);
    for o in &outcomes {
        eprintln!("criterion {} took {:.2} s", o.id, o.seconds);
    }
    let text = match format {
        Format::Json => json(&outcomes),
        Format::Csv => {
            let mut s: String = outcomes.iter().map(|o| o.line() + "\n").collect();
            let passed = outcomes.iter().filter(|o| o.pass).count();
            s.push_str(&format!("{passed}/{} criteria passed\n", outcomes.len()));
            s
        }
    };
    Rendered { text, failed }
}
