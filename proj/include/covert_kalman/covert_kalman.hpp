#ifndef COVERT_KALMAN_COVERT_KALMAN_HPP
#define COVERT_KALMAN_COVERT_KALMAN_HPP

#include "covert_kalman/errors.hpp"
#include "covert_kalman/numerics.hpp"
#include "covert_kalman/random.hpp"
#include "covert_kalman/model.hpp"
#include "covert_kalman/crypto.hpp"
#include "covert_kalman/schedule.hpp"
#include "covert_kalman/eavesdropper.hpp"
#include "covert_kalman/design.hpp"
#include "covert_kalman/harness.hpp"
#include "covert_kalman/config.hpp"
#include "covert_kalman/report.hpp"

#endif  // COVERT_KALMAN_COVERT_KALMAN_HPP
