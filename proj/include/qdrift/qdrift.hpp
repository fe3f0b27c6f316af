#ifndef QDRIFT_QDRIFT_HPP
#define QDRIFT_QDRIFT_HPP

#include "errors.hpp"
#include "quadrature.hpp"
#include "state.hpp"
#include "payoff.hpp"
#include "geometry.hpp"
#include "spectral.hpp"
#include "pricing.hpp"
#include "oracle.hpp"
#include "higher_order.hpp"
#include "io.hpp"

#endif // QDRIFT_QDRIFT_HPP
