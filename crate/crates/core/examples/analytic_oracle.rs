//! Closed-form expectations behind the simulations: the naive accuracy a
//! practitioner would expect under an imperfect reference, the joint cell
//! probabilities of the latent class model, and the two-stage probabilities
//! of the verification model.

use dta_bias::association::analytic_naive_accuracy;
use dta_bias::lcbm::cell_probabilities;
use dta_bias::pvb::stage_probs;
use dta_bias::sim::Accuracy;

fn main() -> dta_bias::Result<()> {
    let index = Accuracy::new(0.9, 0.9);
    let reference = Accuracy::new(0.7, 0.95);
    println!("prev  naive se  naive sp");
    for prev in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let (se, sp) = analytic_naive_accuracy(prev, reference, index)?;
        println!("{prev:.1}   {se:.4}    {sp:.4}");
    }

    let c = cell_probabilities(0.5, Accuracy::new(0.9, 0.9), Accuracy::new(0.9, 0.9))?;
    println!("\ncells (ref, index) at prev 0.5, all accuracies 0.9:");
    println!(
        "  ++ {:.4}  +- {:.4}  -+ {:.4}  -- {:.4}",
        c.p11, c.p10, c.p01, c.p00
    );

    let s = stage_probs(0.5, Accuracy::new(0.7, 0.95), Accuracy::new(0.9, 0.9))?;
    println!(
        "\nstage probabilities: p1 {:.5}  q1 {:.5}  q0 {:.5}",
        s.p1, s.q1, s.q0
    );
    Ok(())
}
