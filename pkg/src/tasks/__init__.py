from .scene_tasks import render_scene_task, run_jobs, scene_seed, separate_scene_task

__all__ = ["render_scene_task", "run_jobs", "scene_seed", "separate_scene_task"]
