#pragma once

// Umbrella header for the whole library.

#include "kktcert/catalog.hpp"
#include "kktcert/cone.hpp"
#include "kktcert/duality.hpp"
#include "kktcert/errors.hpp"
#include "kktcert/expr.hpp"
#include "kktcert/kkt.hpp"
#include "kktcert/problem.hpp"
#include "kktcert/qualifications.hpp"
#include "kktcert/serialize.hpp"
#include "kktcert/tangent.hpp"
