//! One-parameter sweep grids over a network template.

use aoiq::netmodel::{ClassSpec, ModelError, NetworkSpec, NodeId, NodeSpec};
use aoiq::NetworkSpec64;

/// Which rate the sweep varies.
pub enum Param {
    Lambda(String),
    Mu(NodeId),
}

pub struct SweepGrid {
    pub param: Param,
    /// The parameter as written on the command line, echoed in CSV rows.
    pub label: String,
    start: f64,
    stop: f64,
    step: f64,
}

impl SweepGrid {
    /// Parses `param=start:stop:step` where param is `lambda.<class>` or
    /// `mu.<node>`. All three numbers must be positive and start <= stop.
    pub fn parse(text: &str) -> Result<Self, String> {
        let (name, range) = text
            .split_once('=')
            .ok_or_else(|| format!("grid `{text}`: expected param=start:stop:step"))?;
        let parts: Vec<&str> = range.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("grid `{text}`: expected start:stop:step after `=`"));
        }
        let mut nums = [0.0f64; 3];
        for (slot, part) in nums.iter_mut().zip(&parts) {
            *slot = part
                .parse()
                .map_err(|_| format!("grid `{text}`: `{part}` is not a number"))?;
        }
        let [start, stop, step] = nums;
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err(format!("grid `{text}`: bounds must be finite"));
        }
        if start <= 0.0 || step <= 0.0 {
            return Err(format!("grid `{text}`: start and step must be positive"));
        }
        if start > stop {
            return Err(format!("grid `{text}`: start exceeds stop"));
        }
        let param = if let Some(class) = name.strip_prefix("lambda.") {
            Param::Lambda(class.to_string())
        } else if let Some(node) = name.strip_prefix("mu.") {
            let id: u32 = node
                .parse()
                .map_err(|_| format!("grid `{text}`: `{node}` is not a node id"))?;
            Param::Mu(NodeId(id))
        } else {
            return Err(format!(
                "grid `{text}`: unknown parameter `{name}`, expected lambda.<class> or mu.<node>"
            ));
        };
        Ok(Self {
            param,
            label: name.to_string(),
            start,
            stop,
            step,
        })
    }

    /// The parameter must name a class or node of the template.
    pub fn check_target(&self, net: &NetworkSpec64) -> Result<(), String> {
        match &self.param {
            Param::Lambda(class) if net.class(class).is_none() => {
                Err(format!("grid parameter lambda.{class}: no such class"))
            }
            Param::Mu(id) if net.node(*id).is_none() => {
                Err(format!("grid parameter mu.{id}: no such node"))
            }
            _ => Ok(()),
        }
    }

    /// Inclusive grid points. A step larger than the range yields the start
    /// point alone; a tiny tolerance keeps the stop point when accumulated
    /// rounding would otherwise drop it.
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as u64;
        (0..=count)
            .map(|k| self.start + k as f64 * self.step)
            .collect()
    }

    /// Rebuilds the template with the swept rate replaced by `value`.
    pub fn instantiate(
        &self,
        template: &NetworkSpec64,
        value: f64,
    ) -> Result<NetworkSpec64, ModelError> {
        let nodes = template
            .nodes()
            .iter()
            .map(|n| {
                let mu = match &self.param {
                    Param::Mu(id) if *id == n.id() => value,
                    _ => n.mu(),
                };
                NodeSpec::new(n.id(), mu)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let classes = template
            .classes()
            .iter()
            .map(|c| {
                let lambda = match &self.param {
                    Param::Lambda(name) if name == c.name() => value,
                    _ => c.lambda(),
                };
                ClassSpec::new(c.name(), lambda, c.itinerary().to_vec())
            })
            .collect::<Result<Vec<_>, _>>()?;
        NetworkSpec::new(nodes, classes)
    }
}
