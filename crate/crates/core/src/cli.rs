//! The `septangle` command line.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::canonical::{construction_41, good_nested_set, refined_canonical};
use crate::dot::{stree_dot, treeset_dot};
use crate::duality::{check_closed_under_shifting, check_separable, duality_decide, Duality, DualityOptions};
use crate::error::{Error, Result};
use crate::gen;
use crate::graphsep::{decomposition, tk_star};
use crate::io::{self, orientation_labels, Instance, Source};
use crate::orient::{check_star_family, enumerate_tangles, profile_family, Limits, StarFamily};
use crate::refine::NodeKind;
use crate::system::SeparationSystem;
use crate::trees::NestedSet;

#[derive(Parser, Debug)]
#[command(name = "septangle", version, about = "Tangles, tangle-tree duality and canonical trees of tangles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Structural checks on a system and a star family.
    Check(Common),
    /// Lists the tangles of a system.
    Tangles(Common),
    /// Builds a canonical nested set distinguishing all tangles.
    TreeOfTangles {
        #[command(flatten)]
        common: Common,
        /// Refine the canonical set until every node is a star of the
        /// family or home to a tangle.
        #[arg(long, conflicts_with = "good")]
        refine: bool,
        /// Build a nested set of good separations instead.
        #[arg(long)]
        good: bool,
    },
    /// Finds a tangle or an S-tree over the family.
    Duality(Common),
    /// Writes a random instance and its family into a directory.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = GenKind::System)]
        kind: GenKind,
        #[arg(long, default_value_t = 10)]
        max_seps: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    System,
    Graph,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Dot,
    Text,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Instance file: JSON table, bipartition or graph, or an edge list.
    pub input: PathBuf,
    /// Order bound for `S_k`; required for graphs.
    #[arg(long)]
    pub k: Option<usize>,
    /// `tk-star`, `profiles` or `file:<path>`; defaults to `tk-star` for
    /// graphs and `profiles` otherwise.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub max_seps: Option<usize>,
    /// Seed for random choices; the analysis commands make none.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Include per-round construction records.
    #[arg(long)]
    pub trace: bool,
}

impl Common {
    fn limits(&self) -> Limits {
        let mut l = Limits::default();
        if let Some(m) = self.max_seps {
            l.max_seps = m;
        }
        l
    }
}

/// Output and exit code of one invocation.
pub struct Outcome {
    pub text: String,
    pub code: i32,
}

fn resolve_family(inst: &Instance, spec: Option<&str>) -> Result<StarFamily> {
    let s = &inst.system;
    let default = if inst.graph().is_some() { "tk-star" } else { "profiles" };
    match spec.unwrap_or(default) {
        "tk-star" => tk_star(s),
        "profiles" => Ok(profile_family(s)),
        other => match other.strip_prefix("file:") {
            Some(p) => io::load_family(s, p.as_ref()),
            None => Err(Error::input(format!("unknown family {other:?}"))),
        },
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn labels(s: &SeparationSystem, n: &NestedSet) -> Vec<String> {
    n.labels(s)
}

fn check(c: &Common) -> Result<Outcome> {
    let inst = io::load_instance(&c.input, c.k)?;
    let s = &inst.system;
    let f = resolve_family(&inst, c.family.as_deref())?;
    let sub = s.is_submodular();
    let shift = check_closed_under_shifting(s, &f);
    let report = check_star_family(&f, s, shift.is_ok(), c.limits())?;
    let sep = check_separable(s);
    let mut ok = sub.is_ok() && report.friendly && sep.is_ok();
    let mut out = json!({
        "separations": s.len_unoriented(),
        "submodular": match sub {
            Ok(()) => json!({ "ok": true }),
            Err((a, b)) => json!({ "ok": false, "witness": [s.label(a), s.label(b)] }),
        },
        "family": report,
        "closed_under_shifting": match &shift {
            Ok(()) => json!({ "ok": true }),
            Err(w) => json!({
                "ok": false,
                "r": s.label(w.r),
                "s": s.label(w.s),
                "star": s.labels(&w.star),
            }),
        },
        "separable": match sep {
            Ok(()) => json!({ "ok": true }),
            Err((a, b)) => json!({ "ok": false, "witness": [s.label(a), s.label(b)] }),
        },
    });
    if let Some(oc) = &inst.order_check {
        ok &= oc.is_ok();
        out["order_submodular"] = match oc {
            Ok(()) => json!({ "ok": true }),
            Err(w) => json!({ "ok": false, "witness": w }),
        };
    }
    out["ok"] = json!(ok);
    let text = match c.format {
        Format::Text => {
            let flag = |v: &Value| if v["ok"] == json!(true) { "pass" } else { "FAIL" };
            let mut t = format!("separations: {}\n", s.len_unoriented());
            t += &format!("submodular: {}\n", flag(&out["submodular"]));
            if out.get("order_submodular").is_some() {
                t += &format!("order submodular: {}\n", flag(&out["order_submodular"]));
            }
            t += &format!("closed under shifting: {}\n", flag(&out["closed_under_shifting"]));
            t += &format!("friendly family: {}\n", if out["family"]["friendly"] == json!(true) { "pass" } else { "FAIL" });
            t += &format!("separable: {}\n", flag(&out["separable"]));
            t
        }
        _ => pretty(&out),
    };
    Ok(Outcome {
        text,
        code: if ok { 0 } else { 1 },
    })
}

fn tangles(c: &Common) -> Result<Outcome> {
    let inst = io::load_instance(&c.input, c.k)?;
    let s = &inst.system;
    let f = resolve_family(&inst, c.family.as_deref())?;
    let ts = enumerate_tangles(s, &f, c.limits())?;
    let listed: Vec<Vec<String>> = ts.iter().map(|t| orientation_labels(s, t)).collect();
    let text = match c.format {
        Format::Text => listed
            .iter()
            .enumerate()
            .map(|(i, t)| format!("tangle {i}: {}\n", t.join("  ")))
            .collect::<String>()
            + &format!("{} tangles\n", ts.len()),
        _ => pretty(&json!({ "count": ts.len(), "tangles": listed })),
    };
    Ok(Outcome { text, code: 0 })
}

fn class_label(k: &NodeKind) -> String {
    match k {
        NodeKind::InFamily => "star".into(),
        NodeKind::Home(i) => format!("tangle {i}"),
        NodeKind::Unaccounted => "unaccounted".into(),
    }
}

fn tree_of_tangles(c: &Common, refine: bool, good: bool) -> Result<Outcome> {
    let inst = io::load_instance(&c.input, c.k)?;
    let s = &inst.system;
    let f = resolve_family(&inst, c.family.as_deref())?;
    let limits = c.limits();
    let mut out = json!({});
    let (final_set, ts) = if refine {
        let r = refined_canonical(s, &f, limits)?;
        out["canonical"] = json!(labels(s, &r.canonical.nested));
        out["refined"] = json!(labels(s, &r.refinement.refined));
        out["classes"] = json!(r
            .refinement
            .classes
            .iter()
            .map(|cl| json!({ "node": s.labels(&cl.node), "kind": class_label(&cl.kind) }))
            .collect::<Vec<_>>());
        out["inessential_in_canonical"] = json!(r.inessential_in_canonical);
        if c.trace {
            out["trace"] = r.canonical.trace_json(s);
        }
        (r.refinement.refined, r.tangles)
    } else {
        let ts = enumerate_tangles(s, &f, limits)?;
        if good {
            let g = good_nested_set(s, &ts)?;
            out["nested"] = json!(labels(s, &g.nested));
            if c.trace {
                out["trace"] = json!(g
                    .levels
                    .iter()
                    .map(|l| json!({
                        "records": l.records.iter().map(|r| json!({
                            "profile": r.profile,
                            "e_set": s.labels(&r.e_set),
                            "r_p": s.label(r.r_p),
                        })).collect::<Vec<_>>(),
                        "passed_on": l.passed_on,
                    }))
                    .collect::<Vec<_>>());
            }
            (g.nested, g.profiles)
        } else {
            let k = construction_41(s, &ts, limits)?;
            out["nested"] = json!(labels(s, &k.nested));
            if c.trace {
                out["trace"] = k.trace_json(s);
            }
            (k.nested, k.profiles)
        }
    };
    out["tangles"] = json!(ts.iter().map(|t| orientation_labels(s, t)).collect::<Vec<_>>());
    if let Source::Graph(_) = inst.source {
        let d = decomposition(s, &final_set, &ts, limits)?;
        if c.format == Format::Dot {
            return Ok(Outcome {
                text: d.to_dot(),
                code: 0,
            });
        }
        out["decomposition"] = json!(d);
    }
    let text = match c.format {
        Format::Dot => treeset_dot(s, &final_set, &ts, limits)?,
        Format::Text => labels(s, &final_set).join("\n") + "\n",
        Format::Json => pretty(&out),
    };
    Ok(Outcome { text, code: 0 })
}

fn duality(c: &Common) -> Result<Outcome> {
    let inst = io::load_instance(&c.input, c.k)?;
    let s = &inst.system;
    let f = resolve_family(&inst, c.family.as_deref())?;
    let d = duality_decide(
        s,
        &f,
        DualityOptions {
            limits: c.limits(),
            ..Default::default()
        },
    )?;
    let text = match (&d, c.format) {
        (Duality::Tangle(t), Format::Json) => pretty(&json!({
            "result": "tangle",
            "orientation": orientation_labels(s, t),
        })),
        (Duality::Tree(t), Format::Json) => pretty(&json!({
            "result": "tree",
            "vertices": t.n_vertices,
            "edges": t.edges.iter().map(|e| json!({
                "tail": e.tail,
                "head": e.head,
                "label": s.label(e.label),
            })).collect::<Vec<_>>(),
        })),
        (Duality::Tangle(t), _) => format!("TANGLE\n{}\n", orientation_labels(s, t).join("\n")),
        (Duality::Tree(t), _) => format!("TREE\n{}", stree_dot(s, t)),
    };
    Ok(Outcome { text, code: 0 })
}

fn generate(seed: u64, kind: GenKind, max_seps: usize, out: &PathBuf) -> Result<Outcome> {
    std::fs::create_dir_all(out)?;
    match kind {
        GenKind::System => {
            let (s, f, _) = gen::random_instance(seed, max_seps)?;
            let u: &dyn std::any::Any = s.universe().as_ref();
            let u = u.downcast_ref::<crate::BipartitionUniverse>().expect("generated over bipartitions");
            let inst = serde_json::to_string_pretty(&io::bipartition_file(&s, u)).expect("serializable");
            let fam = serde_json::to_string_pretty(&io::family_file(&s, &f)).expect("serializable");
            std::fs::write(out.join("instance.json"), inst + "\n")?;
            std::fs::write(out.join("family.json"), fam + "\n")?;
        }
        GenKind::Graph => {
            let g = gen::symmetric_graph(&mut gen::rng(seed))?;
            std::fs::write(out.join("graph.txt"), io::write_edge_list(&g))?;
        }
    }
    Ok(Outcome {
        text: format!("wrote {}\n", out.display()),
        code: 0,
    })
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    let jobs = match &cli.command {
        Command::Check(c) | Command::Tangles(c) | Command::Duality(c) => c.jobs,
        Command::TreeOfTangles { common, .. } => common.jobs,
        Command::Gen { .. } => None,
    };
    if let Some(j) = jobs {
        if j == 0 {
            return Err(Error::input("--jobs must be positive"));
        }
        // A second call fails once the pool exists; the first one wins.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    match &cli.command {
        Command::Check(c) => check(c),
        Command::Tangles(c) => tangles(c),
        Command::TreeOfTangles { common, refine, good } => tree_of_tangles(common, *refine, *good),
        Command::Duality(c) => duality(c),
        Command::Gen {
            seed,
            kind,
            max_seps,
            out,
        } => generate(*seed, *kind, *max_seps, out),
    }
}

/// Runs one invocation, writing to `out` and `err`; returns the exit code.
pub fn run_with(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match dispatch(cli) {
        Ok(o) => {
            let _ = out.write_all(o.text.as_bytes());
            o.code
        }
        Err(e) => {
            let _ = writeln!(err, "septangle: {e}");
            e.exit_code()
        }
    }
}

pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    run_with(&cli, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
