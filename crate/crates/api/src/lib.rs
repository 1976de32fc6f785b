//! HTTP interface over the scenario archive, valuation, gate and
//! sensitivity analysis.
//!
//! All money travels as decimal strings. Error bodies are
//! `{"code", "message", "errors"?}` with status 400, 404, 409 or 5xx.
//! There is no authentication; bind to loopback unless a proxy in front
//! provides it.

use std::future::Future;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;

use painworth_core::domain::{PainKind, Portfolio};
use painworth_core::funnel::{rank_ideas, FunnelTargets, Idea};
use painworth_core::io::archive::{ArchiveError, ScenarioArchive};
use painworth_core::io::json::{from_json_slice, parse_json};
use painworth_core::io::render::render_json;
use painworth_core::io::ParseError;
use painworth_core::money::{Currency, Money};
use painworth_core::number::{parse_decimal, AmountText, DecimalText};
use painworth_core::scenario::{Adjustments, ScenarioError};
use painworth_core::sensitivity::{breakeven_scale, sweep, tornado, ParamPath, SensitivityError};
use painworth_core::validate::{validate_portfolio, RawCostModel, RawPortfolio, ValidationError};
use painworth_core::valuation::CeilingBasis;

#[derive(Debug, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    status: StatusCode,
    code: String,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    errors: Option<Vec<ValidationError>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    column: Option<usize>,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code: code.to_string(),
            message: message.into(),
            errors: None,
            line: None,
            column: None,
        }
    }

    fn bad_request(code: &str, message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, code, message)
    }

    fn invalid(errors: Vec<ValidationError>) -> Self {
        let message = errors
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; ");
        ApiError {
            errors: Some(errors),
            ..ApiError::bad_request("ValidationFailed", message)
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

impl From<ParseError> for ApiError {
    fn from(e: ParseError) -> Self {
        match e {
            ParseError::SyntaxError {
                line,
                column,
                message,
            } => ApiError {
                line: Some(line),
                column: Some(column),
                ..ApiError::bad_request("SyntaxError", message)
            },
            ParseError::ValidationFailed { errors } => ApiError::invalid(errors),
        }
    }
}

impl From<ArchiveError> for ApiError {
    fn from(e: ArchiveError) -> Self {
        let status = match &e {
            ArchiveError::NotFound(_) => StatusCode::NOT_FOUND,
            ArchiveError::ConcurrentWriteConflict { .. } => StatusCode::CONFLICT,
            ArchiveError::InvalidId(_) => StatusCode::BAD_REQUEST,
            ArchiveError::StorageFull => StatusCode::INSUFFICIENT_STORAGE,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<SensitivityError> for ApiError {
    fn from(e: SensitivityError) -> Self {
        ApiError::bad_request(e.code(), e.to_string())
    }
}

impl From<ScenarioError> for ApiError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Invalid(errors) => ApiError::invalid(errors),
            other => ApiError::bad_request(other.code(), other.to_string()),
        }
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        ApiError::bad_request("InvalidQuery", e.body_text())
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Clone)]
pub struct AppState {
    archive: Arc<ScenarioArchive>,
}

impl AppState {
    pub fn new(archive: ScenarioArchive) -> Self {
        AppState {
            archive: Arc::new(archive),
        }
    }
}

/// Runs archive work off the async executor.
async fn blocking<T, F>(state: &AppState, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&ScenarioArchive) -> ApiResult<T> + Send + 'static,
{
    let archive = Arc::clone(&state.archive);
    tokio::task::spawn_blocking(move || f(&archive))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()))?
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/portfolios", get(list_portfolios).post(create_portfolio))
        .route(
            "/api/portfolios/{id}",
            get(get_portfolio).put(put_portfolio).delete(delete_portfolio),
        )
        .route("/api/portfolios/{id}/evaluate", post(evaluate_stored))
        .route("/api/portfolios/{id}/gate", post(gate_stored))
        .route("/api/portfolios/{id}/sweep", get(sweep_stored))
        .route("/api/portfolios/{id}/tornado", get(tornado_stored))
        .route("/api/portfolios/{id}/breakeven", get(breakeven_stored))
        .route("/api/whatif", post(whatif))
        .route("/api/rank", post(rank))
        .with_state(state)
}

pub async fn bind(addr: SocketAddr) -> std::io::Result<TcpListener> {
    TcpListener::bind(addr).await
}

pub async fn serve(
    listener: TcpListener,
    archive: ScenarioArchive,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(AppState::new(archive)))
        .with_graceful_shutdown(shutdown)
        .await
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

#[derive(Debug, Serialize)]
struct VersionedId {
    id: String,
    version: u64,
}

#[derive(Debug, Serialize)]
struct StoredBody {
    id: String,
    version: u64,
    portfolio: RawPortfolio,
}

async fn list_portfolios(State(state): State<AppState>) -> ApiResult<Json<Vec<VersionedId>>> {
    blocking(&state, |archive| {
        let mut out = Vec::new();
        for id in archive.list()? {
            // a document deleted between listing and reading is skipped
            if let Some(version) = archive.version(&id)? {
                out.push(VersionedId { id, version });
            }
        }
        Ok(Json(out))
    })
    .await
}

async fn create_portfolio(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let portfolio = parse_json(&body)?;
    blocking(&state, move |archive| {
        let version = archive.save(&portfolio, None)?;
        let id = portfolio.id().to_string();
        Ok((StatusCode::CREATED, Json(VersionedId { id, version })).into_response())
    })
    .await
}

async fn load(state: &AppState, id: String) -> ApiResult<(Portfolio, u64)> {
    blocking(state, move |archive| {
        let stored = archive.load(&id)?;
        Ok((stored.portfolio, stored.version))
    })
    .await
}

async fn get_portfolio(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<StoredBody>> {
    let (portfolio, version) = load(&state, id.clone()).await?;
    Ok(Json(StoredBody {
        id,
        version,
        portfolio: portfolio.to_raw(),
    }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PutBody {
    version: u64,
    portfolio: RawPortfolio,
}

async fn put_portfolio(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<VersionedId>> {
    let body: PutBody = from_json_slice(&body)?;
    let portfolio = validate_portfolio(&body.portfolio).map_err(ApiError::invalid)?;
    if portfolio.id() != id {
        return Err(ApiError::bad_request(
            "IdMismatch",
            format!("body id {:?} does not match path id {id:?}", portfolio.id()),
        ));
    }
    blocking(&state, move |archive| {
        if archive.version(&id)?.is_none() {
            return Err(ArchiveError::NotFound(id).into());
        }
        let version = archive.save(&portfolio, Some(body.version))?;
        Ok(Json(VersionedId { id, version }))
    })
    .await
}

#[derive(Debug, Deserialize)]
struct DeleteQuery {
    version: Option<u64>,
}

async fn delete_portfolio(
    State(state): State<AppState>,
    Path(id): Path<String>,
    query: Result<Query<DeleteQuery>, QueryRejection>,
) -> ApiResult<StatusCode> {
    let Query(query) = query?;
    blocking(&state, move |archive| {
        archive.delete(&id, query.version)?;
        Ok(StatusCode::NO_CONTENT)
    })
    .await
}

/// Options accepted by every evaluating endpoint.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OptionsBody {
    #[serde(default)]
    share: Option<DecimalText>,
    #[serde(default)]
    cost_model: Option<RawCostModel>,
    #[serde(default)]
    ceiling_basis: Option<CeilingBasis>,
    #[serde(default)]
    kind: Option<PainKind>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Override {
    path: String,
    value: DecimalText,
}

fn adjustments(o: OptionsBody, overrides: Vec<Override>) -> ApiResult<Adjustments> {
    let overrides = overrides
        .into_iter()
        .map(|o| Ok((o.path.parse::<ParamPath>()?, o.value.0)))
        .collect::<Result<Vec<_>, SensitivityError>>()?;
    Ok(Adjustments {
        overrides,
        kind: o.kind,
        share: o.share.map(|s| s.0),
        cost_model: o.cost_model,
        ceiling_basis: o.ceiling_basis.unwrap_or_default(),
    })
}

/// An empty body means "no options".
fn optional_body<T: serde::de::DeserializeOwned + Default>(body: &[u8]) -> ApiResult<T> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    Ok(from_json_slice(body)?)
}

fn evaluation_response(p: &Portfolio, adj: &Adjustments) -> ApiResult<Response> {
    let e = adj.evaluate(p)?;
    // same bytes as the CLI's json report
    Ok(([(header::CONTENT_TYPE, "application/json")], render_json(&e)).into_response())
}

async fn evaluate_stored(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Response> {
    let options: OptionsBody = optional_body(&body)?;
    let adj = adjustments(options, Vec::new())?;
    let (p, _) = load(&state, id).await?;
    evaluation_response(&p, &adj)
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct WhatIfBody {
    #[serde(default)]
    portfolio_id: Option<String>,
    #[serde(default)]
    portfolio: Option<RawPortfolio>,
    #[serde(default)]
    overrides: Vec<Override>,
    #[serde(default)]
    share: Option<DecimalText>,
    #[serde(default)]
    cost_model: Option<RawCostModel>,
    #[serde(default)]
    ceiling_basis: Option<CeilingBasis>,
    #[serde(default)]
    kind: Option<PainKind>,
}

async fn whatif(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let body: WhatIfBody = from_json_slice(&body)?;
    let options = OptionsBody {
        share: body.share,
        cost_model: body.cost_model,
        ceiling_basis: body.ceiling_basis,
        kind: body.kind,
    };
    let adj = adjustments(options, body.overrides)?;
    let p = match (body.portfolio_id, body.portfolio) {
        (Some(id), None) => load(&state, id).await?.0,
        (None, Some(raw)) => validate_portfolio(&raw).map_err(ApiError::invalid)?,
        _ => {
            return Err(ApiError::bad_request(
                "InvalidRequest",
                "give exactly one of portfolio_id or portfolio",
            ))
        }
    };
    evaluation_response(&p, &adj)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GateBody {
    value_target: AmountText,
    cost_budget: AmountText,
    #[serde(default)]
    min_margin: Option<AmountText>,
    #[serde(default)]
    share: Option<DecimalText>,
    #[serde(default)]
    cost_model: Option<RawCostModel>,
    #[serde(default)]
    ceiling_basis: Option<CeilingBasis>,
    #[serde(default)]
    kind: Option<PainKind>,
}

async fn gate_stored(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Response> {
    let body: GateBody = from_json_slice(&body)?;
    let (p, _) = load(&state, id).await?;
    let cur = p.currency();
    let money = |a: AmountText| Money::round_half_even(a.0, cur);
    let targets = FunnelTargets::new(
        money(body.value_target),
        money(body.cost_budget),
        body.min_margin.map_or(Money::zero(cur), money),
    )
    .map_err(|e| ApiError::bad_request("InvalidTargets", e.to_string()))?;
    let adj = adjustments(
        OptionsBody {
            share: body.share,
            cost_model: body.cost_model,
            ceiling_basis: body.ceiling_basis,
            kind: body.kind,
        },
        Vec::new(),
    )?;
    Ok(Json(adj.gate(&p, &targets)?).into_response())
}

fn query_decimal(name: &str, value: Option<&str>) -> ApiResult<Decimal> {
    let text = value.ok_or_else(|| ApiError::bad_request("InvalidQuery", format!("missing query parameter {name}")))?;
    parse_decimal(text, None)
        .map_err(|e| ApiError::bad_request("InvalidQuery", format!("query parameter {name}: {e}")))
}

fn only_kind(p: Portfolio, kind: Option<PainKind>) -> Portfolio {
    match kind {
        Some(k) => p.only_kind(k),
        None => p,
    }
}

fn query_kind(kind: Option<&str>) -> ApiResult<Option<PainKind>> {
    kind.map(|k| {
        k.parse::<PainKind>()
            .map_err(|e| ApiError::bad_request("InvalidQuery", format!("query parameter kind: {e}")))
    })
    .transpose()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepQuery {
    path: Option<String>,
    from: Option<String>,
    to: Option<String>,
    steps: Option<String>,
    kind: Option<String>,
}

async fn sweep_stored(
    State(state): State<AppState>,
    Path(id): Path<String>,
    query: Result<Query<SweepQuery>, QueryRejection>,
) -> ApiResult<Response> {
    let Query(q) = query?;
    let path: ParamPath = q
        .path
        .as_deref()
        .ok_or_else(|| ApiError::bad_request("InvalidQuery", "missing query parameter path"))?
        .parse()?;
    let from = query_decimal("from", q.from.as_deref())?;
    let to = query_decimal("to", q.to.as_deref())?;
    let steps: usize = q
        .steps
        .as_deref()
        .ok_or_else(|| ApiError::bad_request("InvalidQuery", "missing query parameter steps"))?
        .parse()
        .map_err(|_| ApiError::bad_request("InvalidQuery", "query parameter steps must be a nonnegative integer"))?;
    let kind = query_kind(q.kind.as_deref())?;
    let (p, _) = load(&state, id).await?;
    let p = only_kind(p, kind);
    Ok(Json(sweep(&p, &path, from, to, steps)?).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TornadoQuery {
    rel: Option<String>,
    kind: Option<String>,
}

async fn tornado_stored(
    State(state): State<AppState>,
    Path(id): Path<String>,
    query: Result<Query<TornadoQuery>, QueryRejection>,
) -> ApiResult<Response> {
    let Query(q) = query?;
    let rel = query_decimal("rel", q.rel.as_deref())?;
    let kind = query_kind(q.kind.as_deref())?;
    let (p, _) = load(&state, id).await?;
    let p = only_kind(p, kind);
    Ok(Json(tornado(&p, rel)?).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BreakevenQuery {
    cost: Option<String>,
    kind: Option<String>,
}

async fn breakeven_stored(
    State(state): State<AppState>,
    Path(id): Path<String>,
    query: Result<Query<BreakevenQuery>, QueryRejection>,
) -> ApiResult<Response> {
    let Query(q) = query?;
    let cost = query_decimal("cost", q.cost.as_deref())?;
    let kind = query_kind(q.kind.as_deref())?;
    let (p, _) = load(&state, id).await?;
    let p = only_kind(p, kind);
    let cost = Money::from_decimal(cost, p.currency())
        .map_err(|e| ApiError::bad_request("InvalidQuery", format!("query parameter cost: {e}")))?;
    Ok(Json(breakeven_scale(&p, cost)?).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RankIdea {
    id: String,
    v_economic: AmountText,
    annualized_cost: AmountText,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RankBody {
    #[serde(default)]
    currency: Option<String>,
    ideas: Vec<RankIdea>,
}

async fn rank(body: Bytes) -> ApiResult<Response> {
    let body: RankBody = from_json_slice(&body)?;
    let currency = match body.currency.as_deref() {
        None => Currency::EUR,
        Some(c) => Currency::new(c).map_err(|e| ApiError::bad_request("InvalidCurrency", e.to_string()))?,
    };
    if body.ideas.is_empty() {
        return Err(ApiError::bad_request("InvalidRequest", "at least one idea is required"));
    }
    let ideas: Vec<Idea> = body
        .ideas
        .into_iter()
        .map(|i| Idea {
            id: i.id,
            v_economic: Money::round_half_even(i.v_economic.0, currency),
            annualized_cost: Money::round_half_even(i.annualized_cost.0, currency),
        })
        .collect();
    let ranked = rank_ideas(&ideas).map_err(|e| ApiError::bad_request("CurrencyMismatch", e.to_string()))?;
    Ok(Json(ranked).into_response())
}
