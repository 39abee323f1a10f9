#ifndef SITEWALK_POSE_HPP
#define SITEWALK_POSE_HPP

#include <cmath>
#include <numbers>

#include "sitewalk/geometry.hpp"

namespace sitewalk {

/* Wrap an angle into (-pi, pi] */
inline double normalize_angle(double theta)
{
    double a = std::remainder(theta, 2.0 * std::numbers::pi);
    if (a <= -std::numbers::pi)
        a += 2.0 * std::numbers::pi;
    return a;
}

inline Point2 rotate(Point2 v, double angle)
{
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return { c * v.x - s * v.y, s * v.x + c * v.y };
}

/*
 * Planar pose: position plus heading. The heading is normalized on every
 * construction, so two poses that differ by a full turn compare equal.
 */
class Pose2D
{
public:
    constexpr Pose2D() = default;
    Pose2D(double x, double y, double theta) :
        mX(x), mY(y), mTheta(normalize_angle(theta)) { }
    Pose2D(Point2 position, double theta) :
        Pose2D(position.x, position.y, theta) { }

    double x() const { return mX; }
    double y() const { return mY; }
    double theta() const { return mTheta; }
    Point2 position() const { return { mX, mY }; }

    friend bool operator==(const Pose2D&, const Pose2D&) = default;

private:
    double mX = 0.0;
    double mY = 0.0;
    double mTheta = 0.0;
};

/*
 * Rigid transform p' = R(rotation) p + translation. A Pose2D read as a
 * transform maps coordinates in the pose's local frame into the parent frame.
 */
class Transform2D
{
public:
    constexpr Transform2D() = default;
    Transform2D(double rotation, Point2 translation) :
        mRotation(normalize_angle(rotation)), mTranslation(translation) { }
    explicit Transform2D(const Pose2D& pose) :
        Transform2D(pose.theta(), pose.position()) { }

    static Transform2D identity() { return {}; }

    double rotation() const { return mRotation; }
    Point2 translation() const { return mTranslation; }

    Point2 apply(Point2 p) const { return rotate(p, mRotation) + mTranslation; }

    /* (this ∘ other)(p) = this(other(p)) */
    Transform2D compose(const Transform2D& other) const
    {
        return { mRotation + other.mRotation, apply(other.mTranslation) };
    }

    Transform2D inverse() const
    {
        return { -mRotation, rotate(Point2 { -mTranslation.x, -mTranslation.y }, -mRotation) };
    }

    Pose2D as_pose() const { return { mTranslation, mRotation }; }

private:
    double mRotation = 0.0;
    Point2 mTranslation;
};

/* Pose composition: `local` expressed in `frame` mapped to frame's parent */
inline Pose2D compose(const Pose2D& frame, const Pose2D& local)
{
    return Transform2D(frame).compose(Transform2D(local)).as_pose();
}

/* Express `pose` (parent frame) in the local frame of `frame` */
inline Pose2D relative_to(const Pose2D& frame, const Pose2D& pose)
{
    return Transform2D(frame).inverse().compose(Transform2D(pose)).as_pose();
}

/* Smallest signed difference a - b, wrapped */
inline double angle_difference(double a, double b) { return normalize_angle(a - b); }

} // namespace sitewalk

#endif // SITEWALK_POSE_HPP
