//! Settlement reports: per-provider payout breakdowns across tallying and
//! every performance evaluation, plus poll totals.

use serde::{Deserialize, Serialize};

/// Full payout breakdown for a poll, at any point of its lifecycle.
/// Amounts are display strings in the staking token's decimals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettlementReport {
    pub poll_id: String,
    pub topic: String,
    pub phase: String,
    pub voided: bool,
    pub token: String,
    pub decimals: u32,
    pub rows: Vec<SubmissionRow>,
    pub totals: ReportTotals,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmissionRow {
    pub submission_id: String,
    pub account: String,
    /// Canonical sentiment key; `(sealed)` before reveal, `(invalid)` for
    /// submissions excluded by a failed reveal.
    pub sentiment: String,
    pub stake: String,
    pub returned_at_tally: String,
    /// Full refunds from voided polls or failed reveals.
    pub refunded: String,
    pub evals: Vec<EvalRow>,
    /// Signed net token delta for the provider over the whole lifecycle.
    pub net: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub index: u32,
    pub reward: String,
    pub released: String,
    pub forfeited: String,
    /// reward + released: what the provider actually received this round.
    pub payout: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTotals {
    pub total_staked: String,
    pub pool_deposit: String,
    pub pool_spent: String,
    pub pool_residual_to_pollster: String,
    pub forfeited_to_pollster: String,
    pub withheld_total: String,
    pub refunded_total: String,
}

impl SettlementReport {
    /// CSV rendering: one line per submission and evaluation, with the
    /// submission's tally return and lifecycle net repeated on each line.
    /// Submissions with no settled evaluations emit a single line with
    /// empty evaluation fields.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("submission_id,account,sentiment,stake,returned_at_tally,eval_index,payout,net\n");
        for row in &self.rows {
            if row.evals.is_empty() {
                out.push_str(&format!(
                    "{},{},{},{},{},,,{}\n",
                    row.submission_id,
                    row.account,
                    csv_field(&row.sentiment),
                    row.stake,
                    row.returned_at_tally,
                    row.net,
                ));
            } else {
                for eval in &row.evals {
                    out.push_str(&format!(
                        "{},{},{},{},{},{},{},{}\n",
                        row.submission_id,
                        row.account,
                        csv_field(&row.sentiment),
                        row.stake,
                        row.returned_at_tally,
                        eval.index,
                        eval.payout,
                        row.net,
                    ));
                }
            }
        }
        out
    }

    /// The totals block as a JSON value, appended after the CSV in the
    /// human-facing export.
    pub fn totals_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.totals).expect("totals serialize")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
