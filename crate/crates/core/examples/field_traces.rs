//! Arithmetic in Z_p and the two algebraic tasks' step-by-step traces.
//!
//!     cargo run --example field_traces

use cotlab::arith::Expr;
use cotlab::equation::{solve_direct, LinearSystem};
use cotlab::field::FieldElement;

fn main() -> cotlab::Result<()> {
    let p = 11;
    let a = FieldElement::new(7, p)?;
    let b = FieldElement::new(5, p)?;
    println!("in Z_{p}: 7 + 5 = {}, 7 × 5 = {}, 7 ÷ 5 = {}, 5⁻¹ = {}", a.add(&b)?, a.mul(&b)?, a.div(&b)?, b.inv()?);

    // One handle is reduced per step, innermost brackets first.
    let e = Expr::parse("3+5×(4−8÷(1+3))", p)?;
    let t = e.trace()?;
    println!("\n{}", t.to_text());
    println!("value {} after {} steps", e.evaluate()?, t.steps.len());

    // Gaussian elimination, one variable per block.
    let sys = LinearSystem::parse("2 x1 + 3 x2 + 3 x3 = 8 , 1 x1 + 7 x2 + 0 x3 = 0 , 0 x1 + 2 x2 + 1 x3 = 1 ,", p)?;
    let t = sys.trace()?;
    println!("\n{}", t.problem.join(" "));
    for (k, step) in t.steps.iter().enumerate() {
        println!("  step {}: {}", k + 1, step.join(" "));
    }
    println!("direct solve: {:?}", solve_direct(&sys)?);
    Ok(())
}
