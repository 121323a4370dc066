#pragma once

#include "gjn/antichain.hpp"
#include "gjn/corpus.hpp"
#include "gjn/covering.hpp"
#include "gjn/fields.hpp"
#include "gjn/geometry.hpp"
#include "gjn/hardy.hpp"
#include "gjn/jnp.hpp"
#include "gjn/parallel.hpp"
#include "gjn/quadrature.hpp"
#include "gjn/serialization.hpp"
#include "gjn/subdivision.hpp"
