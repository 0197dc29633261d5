#pragma once

#include "iph/errors.hpp"
#include "iph/linalg.hpp"
#include "iph/optimize.hpp"
#include "iph/phase_type.hpp"
#include "iph/em.hpp"
#include "iph/regression.hpp"
#include "iph/mortality.hpp"
#include "iph/diagnostics.hpp"
#include "iph/csv.hpp"
#include "iph/serialization.hpp"
