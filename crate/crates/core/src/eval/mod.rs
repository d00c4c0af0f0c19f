//! Multilingual benchmark metrics.

pub mod amber;
pub mod langid;
pub mod mme;
pub mod polarity;
pub mod pope;
pub mod report;
pub mod text;

pub use amber::{amber_metrics, AmberAnnotation, AmberResponse, ObjectLexicon};
pub use langid::{detect_language, LangIdConfig, LanguageDetector};
pub use mme::{mme_scores, MmeItem};
pub use polarity::{parse_polarity, Polarity, PolarityLexicon, PolarityParser};
pub use pope::{pope_metrics, Gold, InvalidMode, PopeDataset, PopeItem, PopeSampling};
pub use report::{EvalReport, ReportRow};
