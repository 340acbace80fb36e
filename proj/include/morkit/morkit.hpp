#pragma once

// umbrella header

#include "morkit/autoencoder.hpp"
#include "morkit/bench.hpp"
#include "morkit/bench_config.hpp"
#include "morkit/dense.hpp"
#include "morkit/eig.hpp"
#include "morkit/errors.hpp"
#include "morkit/interp.hpp"
#include "morkit/kpca.hpp"
#include "morkit/krr.hpp"
#include "morkit/pod.hpp"
#include "morkit/quadrature.hpp"
#include "morkit/registration.hpp"
#include "morkit/rng.hpp"
#include "morkit/snapshots.hpp"
