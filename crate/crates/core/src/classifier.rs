use crate::dataset::Label;
use crate::error::Result;
use crate::rule::Value;

/// Anything that labels categorical instances.
pub trait Classifier {
    fn predict(&self, x: &[Value]) -> Result<Label>;

    fn predict_all<R: AsRef<[Value]>>(&self, rows: &[R]) -> Result<Vec<Label>>
    where
        Self: Sized,
    {
        rows.iter().map(|r| self.predict(r.as_ref())).collect()
    }
}
