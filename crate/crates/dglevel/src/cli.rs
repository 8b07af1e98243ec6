//! The `dglevel` command line: one subcommand per computation, JSON reports
//! on stdout, exit code 0 on success, 1 on a domain error, 2 on bad usage.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::algebra::{AlgebraMap, DgAlgebra};
use crate::emss::{self, FibreSquareSpec};
use crate::error::{Error, Result};
use crate::field::FieldTag;
use crate::graded::{DegreeWindow, GradedDims};
use crate::module::Module;
use crate::rational;
use crate::resolve::{self, Strategy};
use crate::spheres::{self, Formalizability, MoleculeId};

#[derive(Parser, Debug)]
#[command(name = "dglevel", version, about = "Levels of DG modules over cochain algebras of spheres")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// `q`, or `fp` for a prime `p`.
    #[arg(long, global = true, default_value = "q")]
    pub field: FieldTag,
    /// Degree window `lo:hi`; defaults to `DG_LEVEL_WINDOW`, then `-16:64`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub window: Option<DegreeWindow>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Print the elapsed time on stderr.
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
    Dot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Top {
    /// `S^{2d−1}` mapping to `S^d`.
    Odd,
    /// `S^{2d−1}` pulled back along itself.
    Pullback,
    Point,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Koszul,
    Bar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum F4 {
    Zero,
    Nonzero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TowerReport {
    Level,
    Model,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Condition {
    I,
    Ii,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Cohomology, level and realizability of `Σ^{-l}Z_m` over `S^d`.
    Molecule {
        #[arg(long)]
        d: i32,
        #[arg(long, allow_hyphen_values = true)]
        l: i32,
        #[arg(long)]
        m: i32,
    },
    /// A window of one component of the Auslander-Reiten quiver.
    Quiver {
        #[arg(long)]
        d: i32,
        #[arg(long, default_value_t = 0)]
        component: i32,
        #[arg(long, default_value_t = 4)]
        rows: usize,
        #[arg(long, default_value_t = 4)]
        cols: usize,
    },
    /// Molecule decompositions, from a module file or from cohomology alone.
    Decompose {
        #[arg(long)]
        d: Option<i32>,
        #[arg(long, allow_hyphen_values = true)]
        dims: Option<GradedDims>,
        #[arg(long)]
        module: Option<PathBuf>,
    },
    /// Level over `H*(S^d)`.
    Level {
        #[arg(long)]
        d: Option<i32>,
        #[arg(long, allow_hyphen_values = true)]
        dims: Option<GradedDims>,
        #[arg(long)]
        module: Option<PathBuf>,
    },
    /// `Tor` of two modules over the same algebra.
    Tor {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[arg(long, value_enum, default_value_t = StrategyArg::Koszul)]
        strategy: StrategyArg,
    },
    /// `φ(M) = dim H(M ⊗^L K)`, compactness, and a level certificate.
    Phi {
        #[arg(long)]
        module: PathBuf,
    },
    /// Eilenberg-Moore spectral sequence of a fibre square over `S^d`.
    Emss {
        #[arg(long)]
        d: i32,
        /// `odd` (also `s<2d-1>`), `pullback` or `point`.
        #[arg(long, value_parser = parse_top, default_value = "odd")]
        top: Top,
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        hopf: i64,
    },
    /// Hopf invariant of a map out of a sphere model.
    Hopf {
        #[arg(long)]
        model: PathBuf,
        /// `auto` or comma-separated coordinates of a cocycle.
        #[arg(long, default_value = "auto")]
        generator: String,
    },
    /// The tower `P_l → S^d` and its level bounds.
    PTower {
        #[arg(long)]
        l: i32,
        #[arg(long)]
        d: i32,
        #[arg(long)]
        m: Option<i32>,
        #[arg(long, value_enum, default_value_t = TowerReport::Level)]
        report: TowerReport,
    },
    /// Level bound for a pile of odd-sphere fibrations.
    Pile {
        #[arg(long)]
        stages: usize,
        #[arg(long, default_value_t = 0)]
        odd_spheres: usize,
    },
    /// Level of a bundle pulled back from a classifying space.
    BundleLevel {
        #[arg(long, value_delimiter = ',')]
        gens: Vec<i32>,
        #[arg(long, value_enum)]
        f4: F4,
        /// Formalizability condition declared for the classifying map.
        #[arg(long, value_enum, default_value_t = Condition::Ii)]
        formalizable: Condition,
    },
}

fn parse_top(s: &str) -> std::result::Result<Top, String> {
    match s {
        "odd" => Ok(Top::Odd),
        "pullback" => Ok(Top::Pullback),
        "point" => Ok(Top::Point),
        _ if s.strip_prefix('s').is_some_and(|n| n.parse::<i32>().is_ok()) => Ok(Top::Odd),
        _ => Err(format!("unknown top space {s:?}")),
    }
}

/// The outcome of one invocation, before rendering.
#[derive(Debug)]
pub struct RunReport {
    pub command: String,
    pub inputs: Value,
    pub result: Value,
    pub paper_ref: &'static str,
    /// Pre-rendered text for `table` and `dot`, when the command has one.
    pub text: Option<String>,
}

impl RunReport {
    pub fn to_json(&self) -> Value {
        json!({"command": self.command, "inputs": self.inputs, "result": self.result, "paperRef": self.paper_ref})
    }
}

/// Process exit code and the text to print on stdout.
#[derive(Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn error_kind(e: &Error) -> String {
    let dbg = format!("{e:?}");
    dbg.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("Error").to_string()
}

fn read_json(path: &PathBuf) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn read_module(path: &PathBuf) -> Result<Module> {
    Module::from_json(&read_json(path)?)
}

fn window(cli: &Cli) -> Result<DegreeWindow> {
    match cli.window {
        Some(w) => Ok(w),
        None => DegreeWindow::from_env(),
    }
}

fn table(v: &Value) -> String {
    let mut out = String::new();
    if let Value::Object(map) = v {
        let width = map.keys().map(|k| k.chars().count()).max().unwrap_or(0);
        for (k, v) in map {
            let cell = match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            out.push_str(&format!("{k:<width$}  {cell}\n"));
        }
    } else {
        out.push_str(&format!("{v}\n"));
    }
    out
}

/// Usage problems the parser cannot see.
struct Usage(String);

fn execute(cli: &Cli) -> std::result::Result<Result<RunReport>, Usage> {
    let field = cli.field;
    if cli.format == Format::Dot && !matches!(cli.command, Command::Quiver { .. }) {
        return Err(Usage("--format dot is only available for quiver".into()));
    }
    let report = |command: &str, inputs: Value, result: Value, paper_ref: &'static str| RunReport {
        command: command.into(),
        inputs,
        result,
        paper_ref,
        text: None,
    };
    let out = match &cli.command {
        Command::Molecule { d, l, m } => (|| {
            let id = MoleculeId::new(*d, *l, *m)?;
            let mut r = Map::new();
            r.insert("molecule".into(), json!(id.to_string()));
            r.insert("cohomology".into(), id.cohomology().to_json());
            r.insert("level".into(), json!(id.level()));
            r.insert("componentIndex".into(), json!(id.component_index()));
            let real = spheres::realizable(&id, field).to_json();
            r.insert("realizable".into(), real["realizable"].clone());
            r.insert("realizability".into(), real);
            Ok(report("molecule", json!({"d": d, "l": l, "m": m, "field": field.to_string()}), Value::Object(r), "thm:J, prop:Z, thm:realization"))
        })(),
        Command::Quiver { d, component, rows, cols } => (|| {
            let q = spheres::quiver_component(*d, *component, *rows, *cols)?;
            let mut r = report(
                "quiver",
                json!({"d": d, "component": component, "rows": rows, "cols": cols, "field": field.to_string()}),
                q.to_json(),
                "thm:J",
            );
            if cli.format == Format::Dot {
                r.text = Some(q.to_dot(field));
            }
            Ok(r)
        })(),
        Command::Decompose { d, dims, module } => {
            if dims.is_some() == module.is_some() {
                return Err(Usage("give exactly one of --dims and --module".into()));
            }
            if dims.is_some() && d.is_none() {
                return Err(Usage("--dims needs --d".into()));
            }
            (|| {
                let inputs = json!({"d": d, "dims": dims.as_ref().map(GradedDims::to_json), "module": module, "field": field.to_string()});
                if let Some(dims) = dims {
                    let dec = spheres::decompose(dims, d.unwrap_or_default())?;
                    return Ok(report("decompose", inputs, dec.to_json(), "thm:J, rem:Krull-Remak-Schmidt, ex:ex"));
                }
                let m = read_module(module.as_ref().expect("checked above"))?;
                let molecules = spheres::molecule_decomposition(&m)?;
                let result = json!({
                    "molecules": molecules.iter().map(MoleculeId::to_json).collect::<Vec<_>>(),
                    "level": molecules.iter().map(MoleculeId::level).max().unwrap_or(0),
                    "ambiguous": false,
                });
                Ok(report("decompose", inputs, result, "thm:J, rem:Krull-Remak-Schmidt"))
            })()
        }
        Command::Level { d, dims, module } => {
            if dims.is_some() == module.is_some() {
                return Err(Usage("give exactly one of --dims and --module".into()));
            }
            if dims.is_some() && d.is_none() {
                return Err(Usage("--dims needs --d".into()));
            }
            (|| {
                let inputs = json!({"d": d, "dims": dims.as_ref().map(GradedDims::to_json), "module": module, "field": field.to_string()});
                let r = match dims {
                    Some(dims) => spheres::sphere_level_from_dims(dims, d.unwrap_or_default())?,
                    None => spheres::sphere_level(&read_module(module.as_ref().expect("checked above"))?)?,
                };
                Ok(report("level", inputs, r.to_json(), "thm:main, thm:J, prop:Z"))
            })()
        }
        Command::Tor { left, right, strategy } => (|| {
            let w = window(cli)?;
            let (m, n) = (read_module(left)?, read_module(right)?);
            let s = match strategy {
                StrategyArg::Koszul => Strategy::Koszul,
                StrategyArg::Bar => Strategy::Bar,
            };
            let dims = resolve::tor(&m, &n, &s, w)?;
            let inputs = json!({"left": left, "right": right, "strategy": format!("{strategy:?}").to_lowercase(), "window": w.to_string()});
            Ok(report("tor", inputs, json!({"tor": dims.to_json()}), "lem:fund"))
        })(),
        Command::Phi { module } => (|| {
            let m = read_module(module)?;
            let verdict = resolve::phi(&m)?;
            let compact = resolve::is_compact(&m)?.as_bool();
            let h = resolve::cohomology_verdict(&m)?;
            let certificate = resolve::infinite_level_certificate(&h, m.algebra())?;
            let bound = match &m {
                Module::Free(f) => Some(resolve::generator_filtration(f)?.level_upper_bound()),
                Module::Raw(_) => None,
            };
            let result = json!({
                "phi": verdict.to_json(),
                "compact": compact,
                "levelUpperBound": bound,
                "certificate": certificate.as_ref().map(|c| c.to_json()),
            });
            Ok(report("phi", json!({"module": module}), result, "prop:compact, thm:ABIM-I"))
        })(),
        Command::Emss { d, top, hopf } => (|| {
            let spec = match top {
                Top::Odd => FibreSquareSpec::odd_sphere(*d, field, *hopf),
                Top::Pullback => FibreSquareSpec::self_pullback(*d, field, *hopf),
                Top::Point => FibreSquareSpec::point(*d, field),
            };
            let stable = emss::run(&spec)?;
            let inputs = json!({"d": d, "top": format!("{top:?}").to_lowercase(), "hopf": hopf, "field": field.to_string()});
            let mut r = report("emss", inputs, stable.to_json(), "lem:E_2, prop:spheres, ex:non-formal");
            r.text = Some(format!(
                "{}\nE∞ total dims  {}\nverdict        {}\n",
                stable.page.to_table(),
                stable.dims,
                stable.verdict.to_json()
            ));
            Ok(r)
        })(),
        Command::Hopf { model, generator } => {
            let coords = if generator == "auto" {
                None
            } else {
                let parsed: Result<Vec<_>> = generator.split(',').map(|s| field.parse_scalar(s.trim())).collect();
                match parsed {
                    Ok(v) => Some(v),
                    Err(e) => return Err(Usage(format!("--generator: {e}"))),
                }
            };
            (|| {
                let v = read_json(model)?;
                let d = v.get("d").and_then(Value::as_i64).ok_or_else(|| Error::Parse("the model needs \"d\"".into()))? as i32;
                let target = DgAlgebra::from_json(v.get("target").ok_or_else(|| Error::Parse("the model needs \"target\"".into()))?)?;
                let source = rational::sphere_model(d)?;
                let images = v.get("images").and_then(Value::as_object).ok_or_else(|| Error::Parse("the model needs \"images\"".into()))?;
                let mut polys = Vec::new();
                for g in source.generators() {
                    let expr = images.get(&g.label).and_then(Value::as_str).unwrap_or("0");
                    polys.push(target.parse_poly(expr)?);
                }
                let map = AlgebraMap::new(Arc::new(source), Arc::new(target), polys)?;
                let h = rational::hopf_invariant(&map, coords.as_deref())?;
                let inputs = json!({"model": model, "generator": generator});
                Ok(report("hopf", inputs, json!({"hopfInvariant": h.to_string(), "d": d}), "prop:spheres, thm:realization"))
            })()
        }
        Command::PTower { l, d, m, report: kind } => (|| {
            let t = rational::build_p_tower(*l, *d, *m)?;
            let inputs = json!({"l": l, "d": d, "m": m, "report": format!("{kind:?}").to_lowercase()});
            let result = match kind {
                TowerReport::Model => t.to_json(),
                TowerReport::Level => rational::tower_level_bounds(&t, cli.window)?.to_json(),
            };
            Ok(report("p-tower", inputs, result, "thm:ex-level, lem:ex-level, prop:pile"))
        })(),
        Command::Pile { stages, odd_spheres } => (|| {
            let (bound, f) = rational::pile_upper_bound(*stages, *odd_spheres)?;
            let result = json!({"levelUpperBound": bound, "filtrationClass": f.class(), "sciBound": rational::sci_level_bound(*stages)});
            Ok(report("pile", json!({"stages": stages, "oddSpheres": odd_spheres}), result, "prop:pile, thm:sci"))
        })(),
        Command::BundleLevel { gens, f4, formalizable } => (|| {
            let declared = Some(match formalizable {
                Condition::I => Formalizability::CondI,
                Condition::Ii => Formalizability::CondII,
            });
            let r = spheres::bundle_level(gens, *f4 == F4::Nonzero, field, declared)?;
            let inputs = json!({"gens": gens, "f4": format!("{f4:?}").to_lowercase(), "field": field.to_string()});
            Ok(report("bundle-level", inputs, r.to_json(), "prop:bundle, ex:ex"))
        })(),
    };
    Ok(out)
}

/// Runs one invocation; `args` includes the program name.
pub fn dispatch<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code: 2, stdout: String::new(), stderr: text }
            };
        }
    };
    let start = Instant::now();
    let result = execute(&cli);
    let stderr = if cli.timing { format!("elapsed {:.3} s\n", start.elapsed().as_secs_f64()) } else { String::new() };
    match result {
        Err(Usage(msg)) => Outcome { code: 2, stdout: String::new(), stderr: format!("error: {msg}\n{stderr}") },
        Ok(Err(e)) => {
            let body = json!({"error": {"kind": error_kind(&e), "message": e.to_string()}});
            Outcome { code: 1, stdout: format!("{}\n", serde_json::to_string_pretty(&body).expect("json")), stderr }
        }
        Ok(Ok(r)) => {
            let stdout = match (cli.format, &r.text) {
                (Format::Json, _) => format!("{}\n", serde_json::to_string_pretty(&r.to_json()).expect("json")),
                (Format::Dot, Some(t)) => t.clone(),
                (Format::Table, Some(t)) => format!("{t}paperRef  {}\n", r.paper_ref),
                (_, None) => format!("{}paperRef  {}\n", table(&r.result), r.paper_ref),
            };
            Outcome { code: 0, stdout, stderr }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &str) -> Outcome {
        dispatch(std::iter::once("dglevel").chain(args.split_whitespace()))
    }

    fn result(args: &str) -> Value {
        let o = run(args);
        assert_eq!(o.code, 0, "{args}: {}{}", o.stdout, o.stderr);
        serde_json::from_str(&o.stdout).unwrap()
    }

    #[test]
    fn molecule_report() {
        let v = result("molecule --d 4 --l 3 --m 1 --field q");
        assert_eq!(v["result"]["cohomology"], json!({"0": 1, "7": 1}));
        assert_eq!(v["result"]["level"], json!(2));
        assert_eq!(v["result"]["realizable"], json!("yes"));
        assert!(v["paperRef"].as_str().unwrap().contains("prop:Z"));
    }

    #[test]
    fn quiver_dot() {
        let o = run("quiver --d 4 --component 0 --rows 3 --format dot");
        assert_eq!(o.code, 0);
        assert!(o.stdout.starts_with("digraph"));
        assert!(o.stdout.contains("3 components"));
        assert_eq!(o.stdout, run("quiver --d 4 --component 0 --rows 3 --format dot").stdout);
    }

    #[test]
    fn decompose_dims() {
        let v = result("decompose --d 4 --field f2 --dims 0:1,5:1,6:1,7:1,12:1,13:1");
        assert!(v["result"]["molecules"].is_array());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run("molecule --d 4 --l 3").code, 2);
        assert_eq!(run("frobnicate").code, 2);
        assert_eq!(run("molecule --d 4 --l 3 --m 1 --format dot").code, 2);
        let o = run("molecule --d 1 --l 0 --m 0");
        assert_eq!(o.code, 1);
        let v: Value = serde_json::from_str(&o.stdout).unwrap();
        assert!(v["error"]["kind"].is_string());
        assert_eq!(run("p-tower --l 2 --d 4 --m 3").code, 1);
    }

    #[test]
    fn other_commands() {
        let v = result("emss --d 4 --top s7 --hopf 1 --field q");
        assert_eq!(v["result"]["totalDims"], json!({"0": 1, "3": 1}));
        assert_eq!(run("emss --d 4 --top s7 --hopf 1 --format table").code, 0);
        let v = result("p-tower --l 2 --d 4 --report level");
        assert_eq!(v["result"]["level"], json!({"kind": "exact", "level": 2}));
        assert_eq!(result("pile --stages 2 --odd-spheres 1")["result"]["levelUpperBound"], json!(3));
        let v = result("bundle-level --gens 4,6,7 --field f2 --f4 nonzero");
        assert_eq!(v["result"]["level"], json!(2));
        assert_eq!(run("bundle-level --gens 4,6,7 --field f2 --f4 zero --format table").code, 0);
    }
}
