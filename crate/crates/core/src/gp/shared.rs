use std::sync::{Arc, Mutex, PoisonError, RwLock};

use super::{GpError, GpModel, HyperParams};
use crate::geometry::Point;

/// A model shared between one writer and many readers.
///
/// Readers take an `Arc` snapshot and never see a half-extended factor: the
/// writer extends a private copy (cheap, columns are shared) and publishes it
/// with a single pointer swap.
#[derive(Debug)]
pub struct SharedGp {
    current: RwLock<Arc<GpModel>>,
    writer: Mutex<()>,
}

impl SharedGp {
    pub fn new(model: GpModel) -> Self {
        Self {
            current: RwLock::new(Arc::new(model)),
            writer: Mutex::new(()),
        }
    }

    pub fn snapshot(&self) -> Arc<GpModel> {
        self.current
            .read()
            .unwrap_or_else(PoisonError::into_inner)
            .clone()
    }

    fn publish(&self, model: GpModel) {
        *self.current.write().unwrap_or_else(PoisonError::into_inner) = Arc::new(model);
    }

    pub fn append(&self, xs: &[Point], ys: &[f64]) -> Result<(), GpError> {
        let _w = self.writer.lock().unwrap_or_else(PoisonError::into_inner);
        let mut next = (*self.snapshot()).clone();
        next.append(xs, ys)?;
        self.publish(next);
        Ok(())
    }

    /// Swaps in new hyper-parameters, fully rebuilding `K_y` and the factor.
    pub fn set_hypers(&self, hypers: HyperParams) -> Result<(), GpError> {
        let _w = self.writer.lock().unwrap_or_else(PoisonError::into_inner);
        let next = self.snapshot().with_hypers(hypers)?;
        self.publish(next);
        Ok(())
    }
}
