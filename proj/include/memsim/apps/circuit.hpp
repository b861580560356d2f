#pragma once

#include "memsim/dpe.hpp"
#include "memsim/linalg.hpp"

namespace memsim::apps {

// Word line with per-segment wire resistance and one device conductance per
// node to ground; solving A v = b gives the node voltages.
struct WordLineCircuit {
    std::size_t nodes = 64;
    double r_segment = 2.93;       // ohms
    Vector device_g;               // siemens, one per node
    double v_drive = 0.2;

    void validate() const;
};

struct WordLineSystem {
    Vector lower, diag, upper, rhs;  // tridiagonal SPD coefficient matrix
    Matrix dense() const;
};

WordLineSystem build_wordline_system(const WordLineCircuit& circuit);

struct HwSolveReport {
    Vector hw_voltages, sw_voltages, dense_voltages;
    Vector hw_history, sw_history;   // relative residual per CG iteration
    bool hw_converged = false, sw_converged = false;
    double rms_error_vs_dense = 0.0; // of the hardware solution
};

// Conjugate gradient with the matvec routed through the DPE (coefficient
// matrix programmed once, pre-alignment format), with a software CG run
// alongside for comparison.
HwSolveReport solve_circuit_hw(const WordLineCircuit& circuit, const EngineConfig& engine,
                               double tol, std::size_t max_iter = 512);

}  // namespace memsim::apps
