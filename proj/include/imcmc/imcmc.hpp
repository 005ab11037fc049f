#pragma once

#include "imcmc/chain.hpp"
#include "imcmc/data_augmentation.hpp"
#include "imcmc/diagnostics/autocorrelation.hpp"
#include "imcmc/diagnostics/conductance.hpp"
#include "imcmc/diagnostics/ks.hpp"
#include "imcmc/diagnostics/report.hpp"
#include "imcmc/diagnostics/scaling.hpp"
#include "imcmc/diagnostics/spectral_gap.hpp"
#include "imcmc/errors.hpp"
#include "imcmc/harness/config.hpp"
#include "imcmc/harness/data.hpp"
#include "imcmc/harness/experiment.hpp"
#include "imcmc/harness/trace_io.hpp"
#include "imcmc/hierarchical.hpp"
#include "imcmc/hmc.hpp"
#include "imcmc/kernel_state.hpp"
#include "imcmc/metropolis.hpp"
#include "imcmc/models.hpp"
#include "imcmc/polya_gamma.hpp"
#include "imcmc/posterior_oracle.hpp"
#include "imcmc/quadrature.hpp"
#include "imcmc/rng.hpp"
#include "imcmc/special.hpp"
#include "imcmc/truncated_normal.hpp"
