// SPDX-License-Identifier: Apache-2.0

//! Builds the problem Hamiltonian of every built-in instance, prints its
//! Pauli expansion and checks the zero-energy states by enumeration.

use crabfactor::encoding::{builtin_instance, verify_instance};

fn main() -> crabfactor::Result<()> {
    for omega in [21, 77, 91, 187, 703, 2479] {
        let inst = builtin_instance(omega)?;
        let report = verify_instance(&inst)?;
        println!("{omega}: {} encoding on {} qubits", inst.method(), inst.n_qubits());
        for s in &report.solutions {
            println!("  {} -> a = {}, b = {:?}", s.label, s.a, s.b);
        }
    }

    // the weighted 2479 set, term by term
    let h = builtin_instance(2479)?.hamiltonian()?;
    println!("\nH_p(2479) =\n{h}");
    Ok(())
}
