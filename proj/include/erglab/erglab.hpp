#pragma once

#include "erglab/atomic_measure.hpp"
#include "erglab/domination.hpp"
#include "erglab/errors.hpp"
#include "erglab/fuzz.hpp"
#include "erglab/io.hpp"
#include "erglab/linalg.hpp"
#include "erglab/manifold.hpp"
#include "erglab/measures.hpp"
#include "erglab/oracle.hpp"
#include "erglab/parallel.hpp"
#include "erglab/pesin.hpp"
#include "erglab/random.hpp"
#include "erglab/spectrum.hpp"
#include "erglab/systems.hpp"
