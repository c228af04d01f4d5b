//! Metrics toolkit: per-class and weighted P/R/F1, McNemar's test,
//! annotator agreement and an error-cause breakdown.
//!
//!     cargo run --example evaluate_metrics

use counterspeech::eval::{cohen_kappa, confusion, error_report, mcnemar, prf, ErrorCause, ErrorRecord, Polarity};
use counterspeech::outcomes::OutcomeLabel;

fn main() -> counterspeech::Result<()> {
    let classes = ["no_reentry", "reentry"];
    let gold: Vec<&str> = [["reentry"; 694].as_slice(), ["no_reentry"; 306].as_slice()].concat();
    let majority = vec!["reentry"; gold.len()];
    let report = prf(&confusion(&gold, &majority, &classes)?)?;
    println!("{}", report.to_markdown("majority"));

    let model: Vec<&str> = gold.iter().enumerate().map(|(i, g)| if i % 7 == 0 { "no_reentry" } else { *g }).collect();
    let m = mcnemar(&gold, &model, &majority)?;
    println!("McNemar b={} c={} statistic={:.3} p={:.3e} ({:?})\n", m.b, m.c, m.statistic, m.p_value, m.method);

    let a: Vec<u8> = [[0u8; 40].as_slice(), &[0; 10], &[1; 10], &[1; 40]].concat();
    let b: Vec<u8> = [[0u8; 40].as_slice(), &[1; 10], &[0; 10], &[1; 40]].concat();
    let k = cohen_kappa(&a, &b)?;
    println!("agreement {:.2}, kappa {:.2}\n", k.agreement_rate, k.kappa);

    use OutcomeLabel::*;
    let rec = |id: &str, gold, predicted, class, polarity, cause| ErrorRecord {
        pair_id: id.into(),
        gold,
        predicted,
        class,
        polarity,
        cause,
    };
    let records = vec![
        rec("p1", HatefulReentry, NoReentry, HatefulReentry, Polarity::FalseNegative, ErrorCause::Negation),
        rec("p2", NoReentry, HatefulReentry, HatefulReentry, Polarity::FalsePositive, ErrorCause::SarcasmIrony),
        rec("p3", NoReentry, NonHatefulReentry, NonHatefulReentry, Polarity::FalsePositive, ErrorCause::RhetoricalQuestion),
    ];
    for r in &records {
        r.validate()?;
    }
    print!("{}", error_report(&records).to_markdown());
    Ok(())
}
