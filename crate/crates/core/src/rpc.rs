//! JSON-RPC 2.0 server over stdio: one request per line, one response per
//! line, order-preserving. Exposes the profiling and recommendation tools
//! plus read-only registry resources.

use std::io::{BufRead, Write};
use std::path::PathBuf;

use serde_json::{json, Value};

use crate::cache::{now_unix, ProfileCache, ProfileCacheEntry};
use crate::data::load_csv;
use crate::dims::Intent;
use crate::engine::{recommend_for_profile, Recommendation, RecommendRequest};
use crate::error::{Error, Result};
use crate::registry::{Registry, UserConstraints};
use crate::report::ProfileReport;
use crate::stress;

pub const PARSE_ERROR: i64 = -32700;
pub const METHOD_NOT_FOUND: i64 = -32601;
pub const INVALID_PARAMS: i64 = -32602;
pub const SERVER_ERROR: i64 = -32000;

pub struct ServerContext {
    pub registry: Registry,
    pub data_root: PathBuf,
    pub cache: Option<ProfileCache>,
}

impl ServerContext {
    pub fn new(registry: Registry, data_root: impl Into<PathBuf>) -> ServerContext {
        ServerContext {
            registry,
            data_root: data_root.into(),
            cache: None,
        }
    }

    pub fn with_cache(mut self, cache: ProfileCache) -> ServerContext {
        self.cache = Some(cache);
        self
    }
}

/// Advertised tools: the profiling/recommendation/registry subset. The
/// hybrid ranker is accepted for compatibility but deliberately not listed
/// (it downgrades to the rule-based path).
const TOOLS: [(&str, &str); 6] = [
    ("list_datasets", "List dataset files under the data root"),
    (
        "analyze_stress_profile",
        "Profile a dataset: stress statistics, flags, requirement vector",
    ),
    (
        "rank_models_rule",
        "Rank synthesizers for a dataset with the rule-based engine",
    ),
    ("list_models", "List registry models with optional filters"),
    ("get_model_info", "Full registry entry for one model"),
    (
        "check_model_constraints",
        "Check a model's hard constraints against a dataset size",
    ),
];

const RESOURCES: [(&str, &str); 4] = [
    ("models://registry", "The full capability registry document"),
    ("models://model/{name}", "One model's registry entry"),
    ("datasets://profiles/{id}", "A cached stress profile by content hash"),
    ("benchmarks://thresholds", "Stress thresholds, bins, and engine knobs"),
];

fn error_response(id: Value, code: i64, message: String) -> String {
    json!({"jsonrpc": "2.0", "id": id, "error": {"code": code, "message": message}}).to_string()
}

fn ok_response(id: Value, result: Value) -> String {
    json!({"jsonrpc": "2.0", "id": id, "result": result}).to_string()
}

fn invalid_params(message: impl Into<String>) -> Error {
    Error::InvalidArgument(message.into())
}

/// Maps internal errors to JSON-RPC error codes.
fn error_code(error: &Error) -> i64 {
    match error {
        Error::InvalidArgument(_) | Error::UnknownIntent(_) | Error::UnknownModel(_) => {
            INVALID_PARAMS
        }
        _ => SERVER_ERROR,
    }
}

pub fn serve(
    reader: impl BufRead,
    mut writer: impl Write,
    ctx: &ServerContext,
) -> std::io::Result<()> {
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if let Some(response) = handle_line(&line, ctx) {
            writeln!(writer, "{response}")?;
            writer.flush()?;
        }
    }
    Ok(())
}

/// Handles one request line; `None` for notifications (no `id`).
pub fn handle_line(line: &str, ctx: &ServerContext) -> Option<String> {
    let request: Value = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(e) => {
            return Some(error_response(
                Value::Null,
                PARSE_ERROR,
                format!("parse error: {e}"),
            ))
        }
    };
    let id = request.get("id").cloned();
    let method = request.get("method").and_then(|m| m.as_str()).unwrap_or("");
    let params = request.get("params").cloned().unwrap_or(Value::Null);

    if method.starts_with("notifications/") {
        return None;
    }
    let id = id?;

    let outcome = dispatch(method, &params, ctx);
    Some(match outcome {
        Ok(result) => ok_response(id, result),
        Err(RpcFailure::UnknownMethod) => error_response(
            id,
            METHOD_NOT_FOUND,
            format!("method not found: {method}"),
        ),
        Err(RpcFailure::App(code, message)) => error_response(id, code, message),
    })
}

enum RpcFailure {
    UnknownMethod,
    App(i64, String),
}

impl From<Error> for RpcFailure {
    fn from(error: Error) -> RpcFailure {
        RpcFailure::App(error_code(&error), error.to_string())
    }
}

fn dispatch(method: &str, params: &Value, ctx: &ServerContext) -> std::result::Result<Value, RpcFailure> {
    match method {
        "initialize" => Ok(json!({
            "protocol": "json-rpc-2.0-stdio",
            "server": {"name": "synthony", "version": env!("CARGO_PKG_VERSION")},
            "capabilities": {"tools": {}, "resources": {}},
        })),
        "tools/list" => Ok(json!({
            "tools": TOOLS
                .iter()
                .map(|(name, description)| json!({"name": name, "description": description}))
                .collect::<Vec<Value>>()
        })),
        "tools/call" => {
            let name = params
                .get("name")
                .and_then(|n| n.as_str())
                .ok_or_else(|| RpcFailure::App(INVALID_PARAMS, "missing tool name".to_string()))?;
            let arguments = params.get("arguments").cloned().unwrap_or(json!({}));
            call_tool(name, &arguments, ctx)
        }
        "resources/list" => Ok(json!({
            "resources": RESOURCES
                .iter()
                .map(|(uri, description)| json!({"uri": uri, "description": description}))
                .collect::<Vec<Value>>()
        })),
        "resources/read" => {
            let uri = params
                .get("uri")
                .and_then(|u| u.as_str())
                .ok_or_else(|| RpcFailure::App(INVALID_PARAMS, "missing uri".to_string()))?;
            let document = read_resource(uri, ctx)?;
            Ok(json!({"uri": uri, "document": document}))
        }
        _ => Err(RpcFailure::UnknownMethod),
    }
}

fn call_tool(name: &str, args: &Value, ctx: &ServerContext) -> std::result::Result<Value, RpcFailure> {
    match name {
        "list_datasets" => Ok(list_datasets(args, ctx)?),
        "analyze_stress_profile" => Ok(analyze_stress_profile(args, ctx)?),
        "rank_models_rule" => Ok(rank_models(args, ctx, false)?),
        // Accepted but not advertised: no LLM is attached, so hybrid requests
        // are served by the rule-based path with an explicit note.
        "rank_models_hybrid" => Ok(rank_models(args, ctx, true)?),
        "list_models" => Ok(list_models(args, ctx)?),
        "get_model_info" => Ok(get_model_info(args, ctx)?),
        "check_model_constraints" => Ok(check_model_constraints(args, ctx)?),
        other => Err(RpcFailure::App(
            INVALID_PARAMS,
            format!("unknown tool: {other}"),
        )),
    }
}

fn list_datasets(args: &Value, ctx: &ServerContext) -> Result<Value> {
    let format_filter = args.get("format_filter").and_then(|f| f.as_str());
    let mut entries = Vec::new();
    let dir = std::fs::read_dir(&ctx.data_root)
        .map_err(|e| Error::io(ctx.data_root.display().to_string(), e))?;
    for entry in dir {
        let entry = entry.map_err(|e| Error::io(ctx.data_root.display().to_string(), e))?;
        let path = entry.path();
        if !path.is_file() {
            continue;
        }
        let format = path
            .extension()
            .map(|e| e.to_string_lossy().to_lowercase())
            .unwrap_or_default();
        if let Some(wanted) = format_filter {
            if format != wanted.to_lowercase() {
                continue;
            }
        }
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        entries.push((name, format));
    }
    entries.sort();
    Ok(json!({
        "datasets": entries
            .into_iter()
            .map(|(name, format)| json!({"name": name, "format": format}))
            .collect::<Vec<Value>>()
    }))
}

fn dataset_path(ctx: &ServerContext, name: &str) -> Result<PathBuf> {
    if name.contains('/') || name.contains('\\') || name.contains("..") {
        return Err(invalid_params(format!("invalid dataset name `{name}`")));
    }
    let path = ctx.data_root.join(format!("{name}.csv"));
    if !path.is_file() {
        return Err(invalid_params(format!(
            "dataset `{name}` not found under the data root"
        )));
    }
    Ok(path)
}

fn profile_report(ctx: &ServerContext, name: &str) -> Result<ProfileReport> {
    let path = dataset_path(ctx, name)?;
    let hash = ProfileCache::content_hash(&path)?;
    if let Some(cache) = &ctx.cache {
        if let Some(entry) = cache.lookup(&hash)? {
            return Ok(ProfileReport {
                dataset: entry.dataset,
                cache_id: Some(entry.content_hash),
                row_count: entry.profile.row_count,
                column_count: entry.meta_features.column_count as usize,
                profile: entry.profile,
                requirements: entry.requirements,
                hard_problem: entry.hard_problem,
                meta_features: entry.meta_features,
            });
        }
    }
    let dataset = load_csv(&path, &Default::default())?;
    let report = ProfileReport::build(&dataset, &ctx.registry.engine, Some(hash.clone()));
    if let Some(cache) = &ctx.cache {
        cache.store(&ProfileCacheEntry {
            content_hash: hash,
            dataset: report.dataset.clone(),
            profile: report.profile,
            requirements: report.requirements,
            meta_features: report.meta_features,
            hard_problem: report.hard_problem,
            created_unix: now_unix(),
        })?;
    }
    Ok(report)
}

fn analyze_stress_profile(args: &Value, ctx: &ServerContext) -> Result<Value> {
    let name = args
        .get("dataset_name")
        .and_then(|n| n.as_str())
        .ok_or_else(|| invalid_params("missing dataset_name"))?;
    Ok(serde_json::to_value(profile_report(ctx, name)?)?)
}

fn rank_models(args: &Value, ctx: &ServerContext, hybrid: bool) -> Result<Value> {
    let intent = match args.get("intent").and_then(|i| i.as_str()) {
        Some(text) => Some(Intent::parse(text)?),
        None => None,
    };
    let constraints = UserConstraints {
        cpu_only: args.get("cpu_only").and_then(|v| v.as_bool()).unwrap_or(false),
        strict_dp: args.get("strict_dp").and_then(|v| v.as_bool()).unwrap_or(false),
    };
    let top_n = args.get("top_n").and_then(|v| v.as_u64()).unwrap_or(3) as usize;
    let request = RecommendRequest {
        intent,
        constraints,
        prefer_speed: args
            .get("prefer_speed")
            .and_then(|v| v.as_bool())
            .unwrap_or(false),
        top_n,
        ..RecommendRequest::new(intent)
    };

    let recommendation: Recommendation =
        if let Some(profile_doc) = args.get("dataset_profile").filter(|v| !v.is_null()) {
            let report: ProfileReport = serde_json::from_value(profile_doc.clone())
                .map_err(|e| invalid_params(format!("bad dataset_profile: {e}")))?;
            recommend_for_profile(&report.dataset, &report.profile, &ctx.registry, &request)?
        } else {
            let name = args
                .get("dataset_name")
                .and_then(|n| n.as_str())
                .ok_or_else(|| invalid_params("missing dataset_name or dataset_profile"))?;
            let report = profile_report(ctx, name)?;
            recommend_for_profile(&report.dataset, &report.profile, &ctx.registry, &request)?
        };

    let mut document = serde_json::to_value(recommendation.clipped())?;
    if hybrid {
        document["method"] = json!("rule_based");
        document["note"] =
            json!("hybrid ranking unavailable in this build; served by the rule-based engine");
    } else {
        document["method"] = json!("rule_based");
    }
    Ok(document)
}

fn list_models(args: &Value, ctx: &ServerContext) -> Result<Value> {
    let family = args.get("family").and_then(|f| f.as_str());
    let cpu_only = args.get("cpu_only_compatible").and_then(|v| v.as_bool());
    let dp_certified = args.get("dp_certified").and_then(|v| v.as_bool());
    let models: Vec<Value> = ctx
        .registry
        .models
        .iter()
        .filter(|m| family.is_none_or(|f| m.family.as_str() == f))
        .filter(|m| cpu_only.is_none_or(|want| m.constraints.cpu_only_compatible == want))
        .filter(|m| dp_certified.is_none_or(|want| m.constraints.dp_certified == want))
        .map(|m| {
            json!({
                "name": m.name,
                "family": m.family.as_str(),
                "avg_quality_score": m.avg_quality_score,
                "dp_certified": m.constraints.dp_certified,
            })
        })
        .collect();
    Ok(json!({"models": models}))
}

fn get_model_info(args: &Value, ctx: &ServerContext) -> Result<Value> {
    let name = args
        .get("name")
        .and_then(|n| n.as_str())
        .ok_or_else(|| invalid_params("missing model name"))?;
    let model = ctx
        .registry
        .model(name)
        .ok_or_else(|| Error::UnknownModel(name.to_string()))?;
    Ok(serde_json::to_value(model)?)
}

fn check_model_constraints(args: &Value, ctx: &ServerContext) -> Result<Value> {
    let name = args
        .get("name")
        .and_then(|n| n.as_str())
        .ok_or_else(|| invalid_params("missing model name"))?;
    let model = ctx
        .registry
        .model(name)
        .ok_or_else(|| Error::UnknownModel(name.to_string()))?;
    let rows = args.get("row_count").and_then(|v| v.as_u64()).map(|v| v as usize);
    let cpu_only = args.get("cpu_only").and_then(|v| v.as_bool()).unwrap_or(false);
    let strict_dp = args.get("strict_dp").and_then(|v| v.as_bool()).unwrap_or(false);

    let mut checks = Vec::new();
    let mut eligible = true;
    let mut push = |constraint: &str, pass: bool, detail: String| {
        checks.push(json!({"constraint": constraint, "pass": pass, "detail": detail}));
    };
    let excluded = model.constraints.exclude;
    push("exclude", !excluded, format!("exclude flag = {excluded}"));
    eligible &= !excluded;
    if cpu_only {
        let pass = !model.constraints.requires_gpu;
        push("cpu_only", pass, format!("requires_gpu = {}", model.constraints.requires_gpu));
        eligible &= pass;
    }
    if strict_dp {
        let pass = model.constraints.dp_certified && model.capabilities.privacy_dp >= 3;
        push(
            "strict_dp",
            pass,
            format!(
                "dp_certified = {}, privacy_dp = {}",
                model.constraints.dp_certified, model.capabilities.privacy_dp
            ),
        );
        eligible &= pass;
    }
    if let (Some(rows), Some(min)) = (rows, model.constraints.min_rows) {
        let pass = rows >= min;
        push("min_rows", pass, format!("{rows} rows vs min {min}"));
        eligible &= pass;
    }
    if let (Some(rows), Some(max)) = (rows, model.constraints.max_recommended_rows) {
        let pass = rows <= max;
        push("max_recommended_rows", pass, format!("{rows} rows vs max {max}"));
        eligible &= pass;
    }
    Ok(json!({"model": name, "eligible": eligible, "checks": checks}))
}

fn read_resource(uri: &str, ctx: &ServerContext) -> Result<Value> {
    if uri == "models://registry" {
        return Ok(serde_json::to_value(&ctx.registry)?);
    }
    if let Some(name) = uri.strip_prefix("models://model/") {
        let model = ctx
            .registry
            .model(name)
            .ok_or_else(|| Error::UnknownModel(name.to_string()))?;
        return Ok(serde_json::to_value(model)?);
    }
    if let Some(id) = uri.strip_prefix("datasets://profiles/") {
        let cache = ctx
            .cache
            .as_ref()
            .ok_or_else(|| invalid_params("no profile cache configured"))?;
        let entry = cache
            .lookup(id)?
            .ok_or_else(|| invalid_params(format!("no cached profile `{id}`")))?;
        let mut value = serde_json::to_value(entry)?;
        // Timestamps stay out of served documents.
        value.as_object_mut().map(|o| o.remove("created_unix"));
        return Ok(value);
    }
    if uri == "benchmarks://thresholds" {
        return Ok(json!({
            "flags": {
                "skew": stress::SKEW_FLAG_THRESHOLD,
                "cardinality": stress::CARDINALITY_FLAG_THRESHOLD,
                "zipf": stress::ZIPF_FLAG_THRESHOLD,
                "small_data_rows": stress::SMALL_DATA_ROWS,
                "correlation_pair": stress::CORRELATION_PAIR_THRESHOLD,
            },
            "requirement_bins": {
                "skew": stress::SKEW_BINS,
                "cardinality": stress::CARDINALITY_BINS,
                "zipf": stress::ZIPF_BINS,
                "rows": stress::ROW_BINS,
                "correlation": ctx.registry.engine.correlation_bins,
            },
            "engine": {
                "decay_curve": ctx.registry.engine.decay_curve,
                "tie_threshold_fraction": ctx.registry.engine.tie_threshold_fraction,
                "quality_bonus_factor": ctx.registry.engine.quality_bonus_factor,
                "non_required_base_weight": ctx.registry.engine.non_required_base_weight,
                "hard_problem": ctx.registry.engine.hard_problem,
            },
        }));
    }
    Err(invalid_params(format!("unknown resource uri `{uri}`")))
}
