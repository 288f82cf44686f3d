"""
Read-Only FastAPI BluePrint for Report Routes
"""
from enum import Enum
from typing import Any, Callable, Dict, List, NamedTuple, Tuple

from fastapi import FastAPI
from pyderive import dataclass, field

#** Variables **#
__all__ = ['Method', 'Route', 'BluePrint']

#** Classes **#

class Method(Enum):
    HEAD = 'HEAD'
    GET  = 'GET'

class Route(NamedTuple):
    action:  Callable
    methods: Tuple[Method, ...]
    path:    str
    kwargs:  Dict[str, Any]

@dataclass
class BluePrint:
    path:   str = '/'
    routes: List[Route] = field(default_factory=list)

    def route(self, path: str, *methods: Method, **kwargs) -> Callable:
        """
        custom decorator to add given function to blueprint router

        :param path:    path relative to the blueprint prefix
        :param methods: http methods served by the route
        :param kwargs:  keyword arguments passed to `add_api_route`
        :return:        decorator function
        """
        def decorator(func: Callable) -> Callable:
            self.routes.append(Route(func, methods or (Method.GET, ), path, kwargs))
            return func
        return decorator

    def get(self, path: str, **kwargs) -> Callable:
        """
        add decorated function as GET (and implicit HEAD) route

        :param path:   path relative to the blueprint prefix
        :param kwargs: keyword arguments passed to `add_api_route`
        :return:       decorator function
        """
        return self.route(path, Method.GET, Method.HEAD, **kwargs)

    def full_path(self, route: Route) -> str:
        return f"{self.path.rstrip('/')}/{route.path.strip('/')}"

    def apply_blueprint(self, app: FastAPI):
        """
        register blueprinted routes on the given app

        :param app: fastapi app instance
        """
        for route in self.routes:
            methods = [m.value for m in route.methods]
            app.add_api_route(
                self.full_path(route), route.action, methods=methods, **route.kwargs)
