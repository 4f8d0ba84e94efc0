//! Comma-separated result tables.
//!
//! Floats are written in shortest round-trip form, so identical runs give
//! byte-identical files. Missing values are empty fields.

use std::fmt::Write as _;

use afdmil_core::metrics::MetricsReport;
use afdmil_core::training::EpochRecord;

use crate::experiment::{AblationRecord, Evaluation};

pub const HISTORY_HEADER: &str =
    "epoch,loss1,loss2,loss3,total,val_acc,val_auc,val_recall,val_precision";
pub const METRICS_HEADER: &str = "part,bags,threshold,acc,auc,recall,precision,tp,fp,tn,fn,recall_degenerate,precision_degenerate,precision_at_k_ins,precision_at_k_att";
pub const ABLATION_HEADER: &str = "k,row,feature_distillation,attention_channel,global_loss,cell_seed,best_epoch,acc,auc,recall,precision,precision_at_k_ins,precision_at_k_att";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut out = format!("{HISTORY_HEADER}\n");
    for r in history {
        let v = r.validation.as_ref();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.epoch,
            r.loss1,
            r.loss2,
            r.loss3,
            r.total,
            opt(v.map(|m| m.acc)),
            opt(v.and_then(|m| m.auc)),
            opt(v.map(|m| m.recall)),
            opt(v.map(|m| m.precision)),
        )
        .unwrap();
    }
    out
}

fn metrics_fields(m: &MetricsReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        m.total(),
        m.threshold,
        m.acc,
        opt(m.auc),
        m.recall,
        m.precision,
        m.tp,
        m.fp,
        m.tn,
        m.fn_,
        m.recall_degenerate,
        m.precision_degenerate
    )
}

/// One row per named evaluation.
pub fn metrics_csv(rows: &[(&str, &Evaluation)]) -> String {
    let mut out = format!("{METRICS_HEADER}\n");
    for (part, e) in rows {
        writeln!(
            out,
            "{part},{},{},{}",
            metrics_fields(&e.metrics),
            opt(e.precision_ins),
            opt(e.precision_att)
        )
        .unwrap();
    }
    out
}

pub fn ablation_csv(records: &[AblationRecord]) -> String {
    let mut out = format!("{ABLATION_HEADER}\n");
    for r in records {
        let [fd, att, global] = r.row.toggles();
        let m = &r.test.metrics;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.k,
            r.row.name(),
            fd,
            att,
            global,
            r.cell_seed,
            r.best_epoch,
            m.acc,
            opt(m.auc),
            m.recall,
            m.precision,
            opt(r.test.precision_ins),
            opt(r.test.precision_att)
        )
        .unwrap();
    }
    out
}
