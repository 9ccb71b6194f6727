//! Thin typed HTTP client for the sketch service.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use starsketch::analysis::{ClusterResult, SketchIndex};
use starsketch::experiment::{ClusterReport, ConvergenceReport, ExperimentConfig, KnnReport};
use starsketch::geometry::{GeneratorParams, RadialProfile, StandardizedOutline, StarFunction};
use starsketch::sketch::{LagSampling, PhiSpec, RandomSketch, Sketch};
use starsketch::verify::{Family, InjectivityReport};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("transport error: {0}")]
    Transport(#[from] reqwest::Error),

    /// Error envelope returned by the service; `kind` is `"numerical"`,
    /// `"invalid_input"`, or `"not_found"`.
    #[error("{message}")]
    Api {
        status: u16,
        kind: String,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, ClientError>;

#[derive(Deserialize)]
struct ErrorEnvelope {
    error: String,
    kind: String,
}

#[derive(Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    pub fn new(base_url: impl Into<String>) -> Self {
        let mut base = base_url.into();
        while base.ends_with('/') {
            base.pop();
        }
        Self {
            base,
            http: reqwest::Client::new(),
        }
    }

    async fn decode<R: DeserializeOwned>(resp: reqwest::Response) -> Result<R> {
        let status = resp.status();
        if status.is_success() {
            Ok(resp.json().await?)
        } else {
            let body = resp.text().await.unwrap_or_default();
            let (kind, message) = match serde_json::from_str::<ErrorEnvelope>(&body) {
                Ok(env) => (env.kind, env.error),
                Err(_) => ("unknown".to_string(), body),
            };
            Err(ClientError::Api {
                status: status.as_u16(),
                kind,
                message,
            })
        }
    }

    async fn post<B: Serialize, R: DeserializeOwned>(&self, path: &str, body: &B) -> Result<R> {
        let resp = self
            .http
            .post(format!("{}{path}", self.base))
            .json(body)
            .send()
            .await?;
        Self::decode(resp).await
    }

    pub async fn health(&self) -> Result<serde_json::Value> {
        let resp = self
            .http
            .get(format!("{}/health", self.base))
            .send()
            .await?;
        Self::decode(resp).await
    }

    pub async fn standardize(&self, points: Vec<[f64; 2]>) -> Result<StandardizedOutline> {
        self.post("/geometry/standardize", &json!({ "points": points }))
            .await
    }

    pub async fn rotate_outline(
        &self,
        outline: &StandardizedOutline,
        angle: f64,
    ) -> Result<StandardizedOutline> {
        self.post(
            "/geometry/rotate",
            &json!({ "outline": outline, "angle": angle }),
        )
        .await
    }

    pub async fn discretize(
        &self,
        outline: &StandardizedOutline,
        m: usize,
        extra_rays: Option<usize>,
    ) -> Result<StarFunction> {
        self.post(
            "/geometry/discretize",
            &json!({ "outline": outline, "m": m, "extra_rays": extra_rays }),
        )
        .await
    }

    pub async fn synthesize(
        &self,
        params: Option<GeneratorParams>,
        seed: u64,
    ) -> Result<SynthesizedShape> {
        self.post(
            "/geometry/synthesize",
            &json!({ "params": params, "seed": seed }),
        )
        .await
    }

    pub async fn sketch(
        &self,
        values: &[f64],
        phi: Option<PhiSpec>,
        method: Option<&str>,
    ) -> Result<Sketch> {
        self.post(
            "/sketch",
            &json!({ "values": values, "phi": phi, "method": method }),
        )
        .await
    }

    pub async fn sketch_random(
        &self,
        values: &[f64],
        t: usize,
        phi: Option<PhiSpec>,
        seed: u64,
        sampling: Option<LagSampling>,
    ) -> Result<RandomSketch> {
        self.post(
            "/sketch/random",
            &json!({
                "values": values, "t": t, "phi": phi,
                "seed": seed, "sampling": sampling
            }),
        )
        .await
    }

    pub async fn kernel(&self, f: &[f64], g: &[f64], phi: Option<PhiSpec>) -> Result<f64> {
        let v: serde_json::Value = self
            .post("/sketch/kernel", &json!({ "f": f, "g": g, "phi": phi }))
            .await?;
        Ok(v["kernel"].as_f64().expect("kernel is a number"))
    }

    pub async fn hoeffding(&self, epsilon: f64, delta: f64, range_width: f64) -> Result<u64> {
        let v: serde_json::Value = self
            .post(
                "/sketch/hoeffding",
                &json!({ "epsilon": epsilon, "delta": delta, "range_width": range_width }),
            )
            .await?;
        Ok(v["samples"].as_u64().expect("samples is an integer"))
    }

    pub async fn equivalent(&self, f: &[f64], g: &[f64]) -> Result<bool> {
        let v: serde_json::Value = self
            .post("/circfn/equivalent", &json!({ "f": f, "g": g }))
            .await?;
        Ok(v["equivalent"].as_bool().expect("equivalent is a bool"))
    }

    pub async fn lag_homometric(&self, f: &[f64], g: &[f64]) -> Result<bool> {
        let v: serde_json::Value = self
            .post("/circfn/lag-homometric", &json!({ "f": f, "g": g }))
            .await?;
        Ok(v["lag_homometric"]
            .as_bool()
            .expect("lag_homometric is a bool"))
    }

    pub async fn sketch_distance(&self, a: &Sketch, b: &Sketch) -> Result<f64> {
        let v: serde_json::Value = self
            .post("/analysis/sketch-distance", &json!({ "a": a, "b": b }))
            .await?;
        Ok(v["distance"].as_f64().expect("distance is a number"))
    }

    pub async fn star_distance(&self, f1: &[f64], f2: &[f64]) -> Result<f64> {
        let v: serde_json::Value = self
            .post("/analysis/star-distance", &json!({ "f1": f1, "f2": f2 }))
            .await?;
        Ok(v["distance"].as_f64().expect("distance is a number"))
    }

    pub async fn rstar_distance(&self, f1: &[f64], f2: &[f64]) -> Result<(f64, usize)> {
        let v: serde_json::Value = self
            .post("/analysis/rstar-distance", &json!({ "f1": f1, "f2": f2 }))
            .await?;
        Ok((
            v["distance"].as_f64().expect("distance is a number"),
            v["best_rotation"].as_u64().expect("rotation is an integer") as usize,
        ))
    }

    pub async fn put_index(&self, name: &str, index: &SketchIndex) -> Result<usize> {
        let resp = self
            .http
            .put(format!("{}/index/{name}", self.base))
            .json(index)
            .send()
            .await?;
        let v: serde_json::Value = Self::decode(resp).await?;
        Ok(v["stored"].as_u64().expect("stored is an integer") as usize)
    }

    pub async fn get_index(&self, name: &str) -> Result<SketchIndex> {
        let resp = self
            .http
            .get(format!("{}/index/{name}", self.base))
            .send()
            .await?;
        Self::decode(resp).await
    }

    pub async fn knn(&self, name: &str, query: &Sketch, k: usize) -> Result<Vec<(String, f64)>> {
        self.post(
            &format!("/index/{name}/knn"),
            &json!({ "query": query, "k": k }),
        )
        .await
    }

    pub async fn kmeans(
        &self,
        name: &str,
        k: usize,
        seed: u64,
        max_iters: Option<usize>,
    ) -> Result<ClusterResult> {
        self.post(
            &format!("/index/{name}/kmeans"),
            &json!({ "k": k, "seed": seed, "max_iters": max_iters }),
        )
        .await
    }

    pub async fn experiment_cluster(&self, cfg: &ExperimentConfig) -> Result<ClusterReport> {
        self.post("/experiment/cluster", cfg).await
    }

    pub async fn experiment_knn(&self, cfg: &ExperimentConfig) -> Result<KnnReport> {
        self.post("/experiment/knn", cfg).await
    }

    pub async fn experiment_convergence(
        &self,
        profile: Option<&RadialProfile>,
        m_values: &[usize],
        phi: Option<PhiSpec>,
    ) -> Result<ConvergenceReport> {
        self.post(
            "/experiment/convergence",
            &json!({ "profile": profile, "m_values": m_values, "phi": phi }),
        )
        .await
    }

    pub async fn verify_injectivity(
        &self,
        m: usize,
        family: Family,
        trials: Option<u64>,
        seed: Option<u64>,
    ) -> Result<InjectivityReport> {
        self.post(
            "/verify/injectivity",
            &json!({ "m": m, "family": family, "trials": trials, "seed": seed }),
        )
        .await
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SynthesizedShape {
    pub outline: StandardizedOutline,
    pub profile: RadialProfile,
}
