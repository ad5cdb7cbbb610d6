#ifndef COMMUTE_COMMUTE_HPP
#define COMMUTE_COMMUTE_HPP

#include "commute/calibration.hpp"
#include "commute/error.hpp"
#include "commute/generator.hpp"
#include "commute/geodata.hpp"
#include "commute/metrics.hpp"
#include "commute/od.hpp"
#include "commute/rng.hpp"

#endif // COMMUTE_COMMUTE_HPP
