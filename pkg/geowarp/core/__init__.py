"""
Core numerical modules: dense fields, camera geometry, masks, losses,
epipolar estimation, attention fusion, oracle scenes, direct optimization
and benchmark evaluation.
"""
