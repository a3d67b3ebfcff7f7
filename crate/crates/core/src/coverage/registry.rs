use std::collections::BTreeMap;
use std::sync::Arc;

use super::{
    CoverageError, CoverageMethod, DataShift, DistanceMetric, Drp, Euclidean, Hpd,
    NormalizationMap, ParameterPrior, PosteriorSampler, PriorDraw, ReferencePolicy, Result,
    UnitHypercubeUniform, WeightedEuclidean,
};

type Ctor<C, T> = Box<dyn Fn(&str, &C) -> Result<Arc<T>> + Send + Sync>;

/// Strategies of one kind, constructed from `name` or `name:args` specs.
pub struct Registry<C, T: ?Sized> {
    kind: &'static str,
    entries: BTreeMap<String, Ctor<C, T>>,
}

impl<C, T: ?Sized> Registry<C, T> {
    pub fn empty(kind: &'static str) -> Self {
        Self {
            kind,
            entries: BTreeMap::new(),
        }
    }

    /// Adds or replaces the constructor for `name`. It receives the text
    /// after the first `:` (empty if none).
    pub fn register(
        &mut self,
        name: &str,
        ctor: impl Fn(&str, &C) -> Result<Arc<T>> + Send + Sync + 'static,
    ) {
        self.entries.insert(name.to_string(), Box::new(ctor));
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }

    pub fn build(&self, spec: &str, ctx: &C) -> Result<Arc<T>> {
        let (name, args) = spec.split_once(':').unwrap_or((spec, ""));
        let ctor = self
            .entries
            .get(name.trim())
            .ok_or_else(|| CoverageError::UnknownStrategy {
                kind: self.kind,
                name: name.trim().to_string(),
                known: self.names().join(", "),
            })?;
        ctor(args.trim(), ctx)
    }
}

fn parse_list(args: &str, what: &str) -> Result<Vec<f64>> {
    args.split(',')
        .map(|s| {
            s.trim().parse::<f64>().map_err(|_| {
                CoverageError::InvalidArgument(format!("{what}: cannot parse `{s}` as a number"))
            })
        })
        .collect()
}

fn no_args(args: &str, name: &str) -> Result<()> {
    if args.is_empty() {
        Ok(())
    } else {
        Err(CoverageError::InvalidArgument(format!(
            "`{name}` takes no arguments, got `{args}`"
        )))
    }
}

pub type MetricRegistry = Registry<(), dyn DistanceMetric>;

impl MetricRegistry {
    /// `euclidean` and `weighted:w0,w1,…`.
    pub fn with_builtins() -> Self {
        let mut r = Self::empty("metric");
        r.register("euclidean", |args, _| {
            no_args(args, "euclidean")?;
            Ok(Arc::new(Euclidean))
        });
        r.register("weighted", |args, _| {
            Ok(Arc::new(WeightedEuclidean::new(parse_list(args, "weighted")?)?))
        });
        r
    }
}

/// What reference policies may need beyond their arguments.
#[derive(Default, Clone)]
pub struct PolicyContext {
    pub prior: Option<Arc<dyn ParameterPrior>>,
}

pub type PolicyRegistry = Registry<PolicyContext, dyn ReferencePolicy>;

impl PolicyRegistry {
    /// `hypercube`, `prior` and `datashift:k,u_max` (default `0,1`).
    pub fn with_builtins() -> Self {
        let mut r = Self::empty("reference policy");
        r.register("hypercube", |args, _| {
            no_args(args, "hypercube")?;
            Ok(Arc::new(UnitHypercubeUniform))
        });
        r.register("prior", |args, ctx: &PolicyContext| {
            no_args(args, "prior")?;
            let prior = ctx.prior.clone().ok_or_else(|| {
                CoverageError::Policy("no parameter prior is available for this model".into())
            })?;
            Ok(Arc::new(PriorDraw::new(prior)))
        });
        r.register("datashift", |args, _| {
            let (k, u) = if args.is_empty() {
                (0, 1.0)
            } else {
                let v = parse_list(args, "datashift")?;
                match v[..] {
                    [k, u] if k >= 0.0 && k.fract() == 0.0 => (k as usize, u),
                    _ => {
                        return Err(CoverageError::InvalidArgument(format!(
                            "datashift expects `k,u_max`, got `{args}`"
                        )))
                    }
                }
            };
            Ok(Arc::new(DataShift::new(k, u)?))
        });
        r
    }
}

/// Ingredients a coverage method may draw on.
#[derive(Clone)]
pub struct MethodContext {
    pub policy: Arc<dyn ReferencePolicy>,
    pub metric: Arc<dyn DistanceMetric>,
    pub normalization: Option<NormalizationMap>,
    pub estimator: Option<Arc<dyn PosteriorSampler>>,
}

pub type MethodRegistry = Registry<MethodContext, dyn CoverageMethod>;

impl MethodRegistry {
    /// `drp` and `hpd`.
    pub fn with_builtins() -> Self {
        let mut r = Self::empty("coverage method");
        r.register("drp", |args, ctx: &MethodContext| {
            no_args(args, "drp")?;
            let normalization = ctx.normalization.clone().ok_or_else(|| {
                CoverageError::InvalidArgument("drp needs a normalization map".into())
            })?;
            Ok(Arc::new(Drp {
                policy: ctx.policy.clone(),
                metric: ctx.metric.clone(),
                normalization,
            }))
        });
        r.register("hpd", |args, ctx: &MethodContext| {
            no_args(args, "hpd")?;
            let est = ctx.estimator.clone().ok_or_else(|| {
                CoverageError::MissingDensity("stored samples".into())
            })?;
            Ok(Arc::new(Hpd::new(est)?))
        });
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_metrics() {
        let r = MetricRegistry::with_builtins();
        assert_eq!(r.build("euclidean", &()).unwrap().label(), "euclidean");
        let w = r.build("weighted:1,2", &()).unwrap();
        assert_eq!(w.distance(&[0.0, 0.0], &[1.0, 1.0]), 3f64.sqrt());
        assert!(r.build("weighted:1,0", &()).is_err());
        assert!(r.build("euclidean:3", &()).is_err());
    }

    #[test]
    fn unknown_names_list_alternatives() {
        let err = PolicyRegistry::with_builtins()
            .build("gaussian", &PolicyContext::default())
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("gaussian") && msg.contains("hypercube"), "{msg}");
    }

    #[test]
    fn policy_specs() {
        let r = PolicyRegistry::with_builtins();
        let ctx = PolicyContext::default();
        assert_eq!(r.build("datashift:0,0.5", &ctx).unwrap().label(), "datashift:0,0.5");
        assert_eq!(r.build("datashift", &ctx).unwrap().label(), "datashift:0,1");
        assert!(r.build("datashift:1.5,1", &ctx).is_err());
        assert!(r.build("prior", &ctx).is_err());
    }

    #[test]
    fn custom_registration() {
        let mut r = MetricRegistry::with_builtins();
        r.register("manhattan-ish", |_, _| Ok(Arc::new(Euclidean)));
        assert!(r.names().contains(&"manhattan-ish"));
    }
}
